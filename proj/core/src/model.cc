#include "intentpipe/model.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "intentpipe/error.h"
#include "intentpipe/rng.h"
#include "intentpipe/text_tables.h"

namespace intentpipe {

std::string_view to_string(Head h) { return h == Head::Linear ? "linear" : "attention"; }

std::optional<Head> parse_head(std::string_view s) {
  if (s == "linear") return Head::Linear;
  if (s == "attention") return Head::Attention;
  return std::nullopt;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("train config: " + m); };
  if (max_sequence_length == 0) fail("max_sequence_length must be >= 1");
  if (batch_size == 0) fail("batch_size must be >= 1");
  if (!(learning_rate > 0)) fail("learning_rate must be > 0");
  if (!(lr_scale > 0)) fail("lr_scale must be > 0");
  if (!(adam_epsilon > 0)) fail("adam_epsilon must be > 0");
  if (epochs == 0) fail("epochs must be >= 1");
  if (!(weight_decay >= 0)) fail("weight_decay must be >= 0");
  if (!(beta1 > 0 && beta1 < 1)) fail("beta1 must lie in (0,1)");
  if (!(beta2 > 0 && beta2 < 1)) fail("beta2 must lie in (0,1)");
  if (!(decision_threshold > 0 && decision_threshold < 1)) fail("decision_threshold must lie in (0,1)");
  if (embedding_dim == 0) fail("embedding_dim must be >= 1");
  if (!(init_scale > 0)) fail("init_scale must be > 0");
}

TrainConfig TrainConfig::from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  TrainConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "max_sequence_length") c.max_sequence_length = value.get<std::size_t>();
      else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "lr_scale") c.lr_scale = value.get<double>();
      else if (key == "adam_epsilon") c.adam_epsilon = value.get<double>();
      else if (key == "epochs") c.epochs = value.get<std::size_t>();
      else if (key == "weight_decay") c.weight_decay = value.get<double>();
      else if (key == "beta1") c.beta1 = value.get<double>();
      else if (key == "beta2") c.beta2 = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "decision_threshold") c.decision_threshold = value.get<double>();
      else if (key == "embedding_dim") c.embedding_dim = value.get<std::size_t>();
      else if (key == "init_scale") c.init_scale = value.get<double>();
      else if (key == "keyword_features") c.keyword_features = value.get<bool>();
      else if (key == "label_mode") {
        auto m = parse_label_mode(value.get<std::string>());
        if (!m) throw ConfigError("train config: unknown label_mode '" + value.get<std::string>() + "'");
        c.label_mode = *m;
      } else if (key == "head") {
        auto h = parse_head(value.get<std::string>());
        if (!h) throw ConfigError("train config: unknown head '" + value.get<std::string>() + "'");
        c.head = *h;
      } else {
        throw ConfigError("train config: unknown key '" + key + "'");
      }
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

Json TrainConfig::to_json() const {
  return Json{{"max_sequence_length", max_sequence_length},
              {"batch_size", batch_size},
              {"learning_rate", learning_rate},
              {"lr_scale", lr_scale},
              {"adam_epsilon", adam_epsilon},
              {"epochs", epochs},
              {"weight_decay", weight_decay},
              {"beta1", beta1},
              {"beta2", beta2},
              {"seed", seed},
              {"label_mode", std::string(to_string(label_mode))},
              {"head", std::string(to_string(head))},
              {"decision_threshold", decision_threshold},
              {"embedding_dim", embedding_dim},
              {"init_scale", init_scale},
              {"keyword_features", keyword_features}};
}

FeatureLayout FeatureLayout::make(std::size_t vocab_size, std::vector<std::string> entity_types,
                                  std::vector<std::string> keywords, const TrainConfig& config) {
  FeatureLayout l;
  l.vocab_size = vocab_size;
  std::sort(entity_types.begin(), entity_types.end());
  l.entity_types = std::move(entity_types);
  if (config.keyword_features) {
    std::sort(keywords.begin(), keywords.end());
    l.keywords = std::move(keywords);
    l.verb_count = true;
  }
  return l;
}

std::vector<std::string> FeatureLayout::feature_names(const Vocabulary& vocab) const {
  if (vocab.size() != vocab_size) throw std::invalid_argument("vocabulary does not match the feature layout");
  std::vector<std::string> names;
  names.reserve(width());
  for (const auto& t : vocab.terms()) names.push_back("tfidf:" + t);
  names.emplace_back("sentiment_score");
  names.emplace_back("polarity:positive");
  names.emplace_back("polarity:negative");
  for (const auto& e : entity_types) names.push_back("entity:" + e);
  names.emplace_back("turn_fraction");
  names.emplace_back("actor_user");
  for (const auto& k : keywords) names.push_back("keyword:" + k);
  if (verb_count) names.emplace_back("verb_count");
  return names;
}

Json FeatureLayout::to_json() const {
  return Json{{"vocab_size", vocab_size},
              {"entity_types", entity_types},
              {"keywords", keywords},
              {"verb_count", verb_count},
              {"width", width()}};
}

FeatureLayout FeatureLayout::from_json(const Json& j) {
  FeatureLayout l;
  try {
    l.vocab_size = j.at("vocab_size").get<std::size_t>();
    l.entity_types = j.at("entity_types").get<std::vector<std::string>>();
    l.keywords = j.at("keywords").get<std::vector<std::string>>();
    l.verb_count = j.at("verb_count").get<bool>();
  } catch (const Json::exception& e) {
    throw DataError(std::string("feature layout: ") + e.what());
  }
  return l;
}

ModelInput assemble_vector(const FeatureBundle& bundle, const std::vector<std::string>& lemmas,
                           const UtteranceContext& context, const FeatureLayout& layout, const Vocabulary& vocab,
                           const TrainConfig& config) {
  ModelInput in;
  in.features.reserve(bundle.tfidf.size() + layout.engineered_width());
  for (const auto& [idx, value] : bundle.tfidf) {
    if (idx >= layout.vocab_size) throw std::invalid_argument("tf-idf index outside the layout");
    in.features.emplace_back(idx, value);
  }
  auto put = [&](std::size_t column, double value) {
    if (value != 0.0) in.features.emplace_back(static_cast<std::uint32_t>(column), value);
  };
  put(layout.sentiment_offset(), bundle.sentiment.score);
  put(layout.polarity_offset(), bundle.sentiment.polarity == Polarity::Positive ? 1.0 : 0.0);
  put(layout.polarity_offset() + 1, bundle.sentiment.polarity == Polarity::Negative ? 1.0 : 0.0);
  for (std::size_t i = 0; i < layout.entity_types.size(); ++i) {
    const auto n = std::count_if(bundle.entities.begin(), bundle.entities.end(),
                                 [&](const Entity& e) { return e.entity_type == layout.entity_types[i]; });
    put(layout.entity_offset() + i, static_cast<double>(n));
  }
  const double denom = static_cast<double>(std::max<std::size_t>(1, context.conversation_length - 1));
  put(layout.turn_offset(), context.conversation_length > 1 ? static_cast<double>(context.position) / denom : 0.0);
  put(layout.actor_offset(), context.actor == Actor::User ? 1.0 : 0.0);
  for (std::size_t i = 0; i < layout.keywords.size(); ++i) {
    auto it = bundle.keyword_freq.find(layout.keywords[i]);
    put(layout.keyword_offset() + i, it == bundle.keyword_freq.end() ? 0.0 : static_cast<double>(it->second));
  }
  if (layout.verb_count) {
    std::size_t verbs = 0;
    for (const auto& [w, n] : bundle.verb_freq) verbs += n;
    put(layout.verb_offset(), static_cast<double>(verbs));
  }

  for (const auto& lemma : lemmas) {
    if (in.tokens.size() == config.max_sequence_length) break;
    if (auto id = vocab.index(lemma)) in.tokens.push_back(*id);
  }
  return in;
}

namespace {

enum LinearTensor { kW = 0, kB = 1 };
enum AttentionTensor { kE = 0, kWq, kWk, kWv, kWo, kBo };

}  // namespace

ModelParams ModelParams::zeros_linear(std::size_t labels, std::size_t features) {
  ModelParams p;
  p.head = Head::Linear;
  p.names = {"W", "b"};
  p.tensors = {Eigen::MatrixXd::Zero(labels, features), Eigen::MatrixXd::Zero(labels, 1)};
  return p;
}

ModelParams ModelParams::zeros_attention(std::size_t labels, std::size_t vocab, std::size_t dim) {
  ModelParams p;
  p.head = Head::Attention;
  p.names = {"E", "Wq", "Wk", "Wv", "Wo", "bo"};
  p.tensors = {Eigen::MatrixXd::Zero(vocab, dim), Eigen::MatrixXd::Zero(dim, dim),
               Eigen::MatrixXd::Zero(dim, dim),   Eigen::MatrixXd::Zero(dim, dim),
               Eigen::MatrixXd::Zero(labels, dim), Eigen::MatrixXd::Zero(labels, 1)};
  return p;
}

std::size_t ModelParams::label_count() const {
  return static_cast<std::size_t>(tensors.back().rows());
}

std::size_t ModelParams::input_width() const {
  return static_cast<std::size_t>(head == Head::Linear ? tensors[kW].cols() : tensors[kE].rows());
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += static_cast<std::size_t>(t.size());
  return n;
}

bool ModelParams::all_finite() const {
  return std::all_of(tensors.begin(), tensors.end(), [](const Eigen::MatrixXd& t) { return t.allFinite(); });
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  for (auto& t : z.tensors) t.setZero();
  return z;
}

std::vector<double> ModelParams::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& t : tensors) {
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) out.push_back(t(r, c));
    }
  }
  return out;
}

void ModelParams::unflatten(std::span<const double> values) {
  if (values.size() != parameter_count()) throw std::invalid_argument("parameter count mismatch");
  std::size_t k = 0;
  for (auto& t : tensors) {
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = values[k++];
    }
  }
}

Json ModelParams::to_json() const {
  Json ts = Json::array();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const auto& t = tensors[i];
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(t.size()));
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) data.push_back(t(r, c));
    }
    ts.push_back(Json{{"name", names[i]}, {"rows", t.rows()}, {"cols", t.cols()}, {"data", data}});
  }
  return Json{{"head", std::string(to_string(head))}, {"tensors", ts}};
}

ModelParams ModelParams::from_json(const Json& j) {
  ModelParams p;
  try {
    auto head = parse_head(j.at("head").get<std::string>());
    if (!head) throw DataError("model parameters: unknown head");
    p.head = *head;
    for (const auto& t : j.at("tensors")) {
      const auto rows = t.at("rows").get<Eigen::Index>();
      const auto cols = t.at("cols").get<Eigen::Index>();
      const auto data = t.at("data").get<std::vector<double>>();
      if (static_cast<std::size_t>(rows * cols) != data.size()) throw DataError("model parameters: bad tensor size");
      Eigen::MatrixXd m(rows, cols);
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++];
      }
      p.names.push_back(t.at("name").get<std::string>());
      p.tensors.push_back(std::move(m));
    }
  } catch (const Json::exception& e) {
    throw DataError(std::string("model parameters: ") + e.what());
  }
  const std::size_t expected = p.head == Head::Linear ? 2 : 6;
  if (p.tensors.size() != expected) throw DataError("model parameters: wrong tensor count");
  return p;
}

void initialize(ModelParams& params, Rng& rng, double scale) {
  for (auto& t : params.tensors) {
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = rng.uniform(-scale, scale);
    }
  }
}

Eigen::VectorXd softmax(const Eigen::VectorXd& x) {
  if (x.size() == 0) throw std::invalid_argument("softmax of an empty vector");
  Eigen::VectorXd e = (x.array() - x.maxCoeff()).exp();
  return e / e.sum();
}

Eigen::VectorXd logistic(const Eigen::VectorXd& x) {
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double z = x[i];
    if (z >= 0) {
      out[i] = 1.0 / (1.0 + std::exp(-z));
    } else {
      const double e = std::exp(z);
      out[i] = e / (1.0 + e);
    }
  }
  return out;
}

std::size_t argmax(const Eigen::VectorXd& x) {
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < x.size(); ++i) {
    if (x[i] > x[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(i);
  }
  return best;
}

namespace {

struct AttentionCache {
  Eigen::MatrixXd X, Q, K, V, A, H;
  Eigen::VectorXd pooled;
};

void check_input(const ModelParams& params, const ModelInput& input) {
  const std::size_t width = params.input_width();
  if (params.head == Head::Linear) {
    for (const auto& [idx, v] : input.features) {
      if (idx >= width) throw std::invalid_argument("feature index outside the model input width");
    }
  } else {
    for (auto t : input.tokens) {
      if (t >= width) throw std::invalid_argument("token id outside the model vocabulary");
    }
  }
}

Eigen::VectorXd linear_logits(const ModelParams& p, const ModelInput& input) {
  Eigen::VectorXd z = p.tensors[kB].col(0);
  for (const auto& [idx, v] : input.features) z += v * p.tensors[kW].col(idx);
  return z;
}

Eigen::VectorXd attention_logits(const ModelParams& p, const ModelInput& input, AttentionCache* cache) {
  const auto& E = p.tensors[kE];
  const Eigen::Index T = static_cast<Eigen::Index>(input.tokens.size());
  const Eigen::Index d = E.cols();
  if (T == 0) {
    if (cache) cache->pooled = Eigen::VectorXd::Zero(d);
    return p.tensors[kBo].col(0);
  }
  AttentionCache local;
  AttentionCache& c = cache ? *cache : local;
  c.X.resize(T, d);
  for (Eigen::Index t = 0; t < T; ++t) c.X.row(t) = E.row(input.tokens[static_cast<std::size_t>(t)]);
  c.Q = c.X * p.tensors[kWq];
  c.K = c.X * p.tensors[kWk];
  c.V = c.X * p.tensors[kWv];
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  c.A = (c.Q * c.K.transpose()) * scale;
  for (Eigen::Index t = 0; t < T; ++t) {
    Eigen::VectorXd row = c.A.row(t).transpose();
    c.A.row(t) = softmax(row).transpose();
  }
  c.H = c.A * c.V;
  c.pooled = c.H.colwise().mean().transpose();
  return p.tensors[kWo] * c.pooled + p.tensors[kBo].col(0);
}

Eigen::VectorXd logits_of(const ModelParams& params, const ModelInput& input, AttentionCache* cache) {
  return params.head == Head::Linear ? linear_logits(params, input) : attention_logits(params, input, cache);
}

// d(loss)/d(logits) for one example.
Eigen::VectorXd logit_gradient(const Eigen::VectorXd& z, const Target& target, bool multi_label) {
  if (multi_label) {
    Eigen::VectorXd g = logistic(z);
    for (Eigen::Index i = 0; i < z.size(); ++i) g[i] -= target.labels[static_cast<std::size_t>(i)];
    return g / static_cast<double>(z.size());
  }
  Eigen::VectorXd g = softmax(z);
  g[static_cast<Eigen::Index>(target.class_index)] -= 1.0;
  return g;
}

void accumulate_attention(const ModelParams& p, const ModelInput& input, const AttentionCache& c,
                          const Eigen::VectorXd& dz, ModelParams& g) {
  g.tensors[kBo].col(0) += dz;
  const Eigen::Index T = static_cast<Eigen::Index>(input.tokens.size());
  if (T == 0) return;
  const Eigen::Index d = c.X.cols();
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  g.tensors[kWo] += dz * c.pooled.transpose();
  const Eigen::VectorXd dp = p.tensors[kWo].transpose() * dz;
  const Eigen::MatrixXd dH = Eigen::VectorXd::Ones(T) * (dp.transpose() / static_cast<double>(T));
  const Eigen::MatrixXd dA = dH * c.V.transpose();
  const Eigen::MatrixXd dV = c.A.transpose() * dH;
  const Eigen::VectorXd inner = (dA.array() * c.A.array()).rowwise().sum();
  const Eigen::MatrixXd dS = (c.A.array() * (dA.colwise() - inner).array()).matrix();
  const Eigen::MatrixXd dQ = dS * c.K * scale;
  const Eigen::MatrixXd dK = dS.transpose() * c.Q * scale;

  g.tensors[kWq] += c.X.transpose() * dQ;
  g.tensors[kWk] += c.X.transpose() * dK;
  g.tensors[kWv] += c.X.transpose() * dV;
  const Eigen::MatrixXd dX = dQ * p.tensors[kWq].transpose() + dK * p.tensors[kWk].transpose() +
                             dV * p.tensors[kWv].transpose();
  for (Eigen::Index t = 0; t < T; ++t) g.tensors[kE].row(input.tokens[static_cast<std::size_t>(t)]) += dX.row(t);
}

}  // namespace

ForwardResult forward(const ModelParams& params, const ModelInput& input, bool multi_label) {
  check_input(params, input);
  ForwardResult r;
  r.logits = logits_of(params, input, nullptr);
  r.probabilities = multi_label ? logistic(r.logits) : softmax(r.logits);
  return r;
}

double loss_from_logits(const Eigen::VectorXd& logits, const Target& target, bool multi_label) {
  if (static_cast<std::size_t>(logits.size()) != target.labels.size()) {
    throw std::invalid_argument("target does not match the label space");
  }
  if (multi_label) {
    double total = 0;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
      const double z = logits[i];
      const double y = target.labels[static_cast<std::size_t>(i)];
      total += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    }
    return total / static_cast<double>(logits.size());
  }
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return lse - logits[static_cast<Eigen::Index>(target.class_index)];
}

GradientResult gradients(const ModelParams& params, std::span<const Example* const> batch, bool multi_label) {
  if (batch.empty()) throw std::invalid_argument("gradients of an empty batch");
  GradientResult out;
  out.grads = params.zeros_like();
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  AttentionCache cache;
  for (const Example* ex : batch) {
    check_input(params, ex->input);
    const Eigen::VectorXd z = logits_of(params, ex->input, &cache);
    out.loss += loss_from_logits(z, ex->target, multi_label) * inv_b;
    const Eigen::VectorXd dz = logit_gradient(z, ex->target, multi_label) * inv_b;
    if (params.head == Head::Linear) {
      out.grads.tensors[kB].col(0) += dz;
      for (const auto& [idx, v] : ex->input.features) out.grads.tensors[kW].col(idx) += v * dz;
    } else {
      accumulate_attention(params, ex->input, cache, dz, out.grads);
    }
  }
  return out;
}

Json to_json(const EpochStats& s, bool include_elapsed) {
  Json j{{"epoch", s.epoch},
         {"train_loss", s.train_loss},
         {"validation_loss", s.validation_loss},
         {"validation_accuracy", s.validation_accuracy}};
  if (s.validation_empty) j["validation_empty"] = true;
  if (include_elapsed) j["elapsed_seconds"] = s.elapsed_seconds;
  return j;
}

EpochStats epoch_stats_from_json(const Json& j) {
  EpochStats s;
  s.epoch = j.at("epoch").get<std::size_t>();
  s.train_loss = j.at("train_loss").get<double>();
  s.validation_loss = j.at("validation_loss").get<double>();
  s.validation_accuracy = j.at("validation_accuracy").get<double>();
  s.validation_empty = j.value("validation_empty", false);
  s.elapsed_seconds = j.value("elapsed_seconds", 0.0);
  return s;
}

IntentPrediction decide(const Eigen::VectorXd& probabilities, bool multi_label, double threshold) {
  IntentPrediction p;
  p.probabilities.assign(probabilities.data(), probabilities.data() + probabilities.size());
  const std::size_t best = argmax(probabilities);
  if (!multi_label) {
    p.labels = {best};
    return p;
  }
  for (Eigen::Index i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i] >= threshold || static_cast<std::size_t>(i) == best) {
      p.labels.push_back(static_cast<std::size_t>(i));
    }
  }
  return p;
}

IntentPrediction predict(const TrainedModel& model, const ModelInput& input) {
  const auto r = forward(model.params, input, model.multi_label());
  return decide(r.probabilities, model.multi_label(), model.config.decision_threshold);
}

namespace {

bool prediction_correct(const IntentPrediction& p, const Target& t, bool multi_label) {
  if (!multi_label) return p.labels.front() == t.class_index;
  for (std::size_t i = 0; i < t.labels.size(); ++i) {
    const bool predicted = std::binary_search(p.labels.begin(), p.labels.end(), i);
    if (predicted != (t.labels[i] != 0)) return false;
  }
  return true;
}

std::set<std::string> conversations_of(const std::vector<Example>& examples) {
  std::set<std::string> out;
  for (const auto& e : examples) out.insert(e.source.conversation_id);
  return out;
}

}  // namespace

TrainedModel train(const std::vector<Example>& train_set, const std::vector<Example>& validation_set,
                   const ModelSpec& spec, const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  if (train_set.empty()) throw DataError("empty training split");
  if (validation_set.empty() && !options.allow_empty_validation) throw DataError("empty validation split");

  TrainedModel model;
  model.config = config;
  model.labels = spec.labels;
  model.layout = spec.layout;
  model.vocab_hash = spec.vocab_hash;
  model.train_conversations = conversations_of(train_set);
  model.validation_conversations = conversations_of(validation_set);
  for (const auto& id : model.validation_conversations) {
    if (model.train_conversations.count(id)) throw DataError("leakage: conversation " + id + " is in both splits");
  }

  const bool multi = spec.labels.multi_label();
  const std::size_t labels = spec.labels.size();
  for (const auto* set : {&train_set, &validation_set}) {
    for (const auto& e : *set) {
      if (e.target.labels.size() != labels) throw DataError("target width does not match the label space");
    }
  }

  Rng rng(config.seed);
  model.params = config.head == Head::Linear
                     ? ModelParams::zeros_linear(labels, spec.layout.width())
                     : ModelParams::zeros_attention(labels, spec.vocab_size, config.embedding_dim);
  initialize(model.params, rng, config.init_scale);

  AdamState state = AdamState::for_params(model.params);
  const AdamHyper hyper = AdamHyper::from(config);

  std::vector<const Example*> order;
  order.reserve(train_set.size());
  for (const auto& e : train_set) order.push_back(&e);

  if (options.progress) *options.progress << epoch_table_header();
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    rng.shuffle(std::span<const Example*>(order));
    double loss_sum = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      std::span<const Example* const> batch(order.data() + begin, end - begin);
      auto g = gradients(model.params, batch, multi);
      loss_sum += g.loss * static_cast<double>(batch.size());
      adamw_step(model.params, g.grads, state, hyper);
      if (!model.params.all_finite()) {
        throw std::runtime_error("non-finite parameters after optimizer step " + std::to_string(state.step));
      }
    }

    EpochStats s;
    s.epoch = epoch;
    s.train_loss = loss_sum / static_cast<double>(order.size());
    if (validation_set.empty()) {
      s.validation_empty = true;
    } else {
      double vloss = 0;
      std::size_t correct = 0;
      for (const auto& e : validation_set) {
        const auto r = forward(model.params, e.input, multi);
        vloss += loss_from_logits(r.logits, e.target, multi);
        if (prediction_correct(decide(r.probabilities, multi, config.decision_threshold), e.target, multi)) ++correct;
      }
      s.validation_loss = vloss / static_cast<double>(validation_set.size());
      s.validation_accuracy = static_cast<double>(correct) / static_cast<double>(validation_set.size());
    }
    s.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    model.history.push_back(s);
    if (options.progress) *options.progress << epoch_table_row(s) << std::flush;
  }
  return model;
}

PerSentimentResult train_per_sentiment(const std::vector<Example>& train_set,
                                       const std::vector<Example>& validation_set, const ModelSpec& spec,
                                       const TrainConfig& config, const TrainOptions& options) {
  PerSentimentResult out;
  std::map<Polarity, std::vector<Example>> train_slices, validation_slices;
  for (const auto& e : train_set) train_slices[e.polarity].push_back(e);
  for (const auto& e : validation_set) validation_slices[e.polarity].push_back(e);

  for (auto& [polarity, slice] : train_slices) {
    auto& vslice = validation_slices[polarity];
    const std::string name(to_string(polarity));
    out.train_sizes[polarity] = slice.size();
    out.validation_sizes[polarity] = vslice.size();
    if (slice.size() < config.batch_size) {
      out.warnings.push_back("slice " + name + " has " + std::to_string(slice.size()) +
                             " training examples, fewer than batch_size " + std::to_string(config.batch_size) +
                             "; training with a batch of " + std::to_string(slice.size()));
    }
    if (vslice.empty()) out.warnings.push_back("slice " + name + " has no validation examples");
    TrainOptions o = options;
    o.allow_empty_validation = true;
    if (o.progress) *o.progress << "sentiment slice: " << name << "\n";
    TrainedModel m = train(slice, vslice, spec, config, o);
    m.slice = name;
    out.models.emplace(polarity, std::move(m));
  }
  for (const auto& [polarity, vslice] : validation_slices) {
    if (!train_slices.count(polarity)) {
      out.validation_sizes[polarity] = vslice.size();
      out.warnings.push_back("slice " + std::string(to_string(polarity)) +
                             " has validation examples but no training examples");
    }
  }
  return out;
}

Json checkpoint_json(const TrainedModel& model) {
  Json history = Json::array();
  for (const auto& s : model.history) history.push_back(to_json(s, false));
  return Json{{"format", kCheckpointFormat},
              {"version", kCheckpointVersion},
              {"slice", model.slice},
              {"config", model.config.to_json()},
              {"labels", model.labels.to_json()},
              {"vocab_hash", model.vocab_hash},
              {"layout", model.layout.to_json()},
              {"train_conversations", model.train_conversations},
              {"validation_conversations", model.validation_conversations},
              {"history", history},
              {"params", model.params.to_json()}};
}

TrainedModel model_from_checkpoint(const Json& j) {
  TrainedModel m;
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) throw DataError("not a model checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion) throw DataError("unsupported checkpoint version");
    m.slice = j.at("slice").get<std::string>();
    m.config = TrainConfig::from_json(j.at("config"));
    m.labels = LabelSpace::from_json(j.at("labels"));
    m.vocab_hash = j.at("vocab_hash").get<std::string>();
    m.layout = FeatureLayout::from_json(j.at("layout"));
    m.train_conversations = j.at("train_conversations").get<std::set<std::string>>();
    m.validation_conversations = j.at("validation_conversations").get<std::set<std::string>>();
    for (const auto& s : j.at("history")) m.history.push_back(epoch_stats_from_json(s));
    m.params = ModelParams::from_json(j.at("params"));
  } catch (const Json::exception& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
  if (m.params.label_count() != m.labels.size()) throw DataError("checkpoint: label space does not match parameters");
  return m;
}

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path) {
  write_json_file(path, checkpoint_json(model));
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("no model: " + path.string() + " does not exist");
  return model_from_checkpoint(read_json_file(path));
}

}  // namespace intentpipe
