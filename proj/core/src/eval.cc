#include "intentpipe/eval.h"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "intentpipe/error.h"

namespace intentpipe {

LabelCounts& LabelCounts::operator+=(const LabelCounts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

LabelCounts ConfusionCounts::pooled() const {
  LabelCounts out;
  for (const auto& c : labels) out += c;
  return out;
}

ConfusionCounts confusion(const LabelRows& predictions, const LabelRows& targets, std::size_t label_count) {
  if (predictions.size() != targets.size()) throw std::invalid_argument("predictions and targets differ in length");
  ConfusionCounts out;
  out.labels.assign(label_count, {});
  out.examples = targets.size();
  for (std::size_t n = 0; n < targets.size(); ++n) {
    if (predictions[n].size() != label_count || targets[n].size() != label_count) {
      throw std::invalid_argument("row width does not match the label count");
    }
    for (std::size_t l = 0; l < label_count; ++l) {
      const bool p = predictions[n][l] != 0;
      const bool t = targets[n][l] != 0;
      auto& c = out.labels[l];
      if (p && t) ++c.tp;
      else if (p) ++c.fp;
      else if (t) ++c.fn;
      else ++c.tn;
    }
  }
  return out;
}

namespace {

Metric ratio(double num, double den) {
  if (den == 0) return {0.0, true};
  return {num / den, false};
}

}  // namespace

LabelMetrics metrics(const LabelCounts& c) {
  const auto tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
  const auto fn = static_cast<double>(c.fn), tn = static_cast<double>(c.tn);
  LabelMetrics m;
  m.accuracy = ratio(tp + tn, tp + tn + fp + fn);
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.f1 = ratio(tp, tp + 0.5 * (fp + fn));
  return m;
}

double auc_roc(const std::vector<double>& scores, const std::vector<std::uint8_t>& targets) {
  if (scores.size() != targets.size()) throw std::invalid_argument("scores and targets differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (targets[order[k]]) {
        positive_rank_sum += avg_rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) throw std::invalid_argument("undefined AUC");
  const double p = static_cast<double>(positives), q = static_cast<double>(negatives);
  return (positive_rank_sum - p * (p + 1) / 2.0) / (p * q);
}

namespace {

LabelMetrics mean_of(const std::vector<LabelMetrics>& rows) {
  LabelMetrics out;
  if (rows.empty()) return out;
  const double n = static_cast<double>(rows.size());
  for (const auto& r : rows) {
    out.accuracy.value += r.accuracy.value / n;
    out.precision.value += r.precision.value / n;
    out.recall.value += r.recall.value / n;
    out.f1.value += r.f1.value / n;
  }
  return out;
}

LabelRows to_rows(const std::vector<IntentPrediction>& predictions, std::size_t label_count) {
  LabelRows rows;
  rows.reserve(predictions.size());
  for (const auto& p : predictions) {
    std::vector<std::uint8_t> row(label_count, 0);
    for (auto l : p.labels) row.at(l) = 1;
    rows.push_back(std::move(row));
  }
  return rows;
}

MetricsReport score(const std::vector<std::string>& names, bool multi_label,
                    const std::vector<IntentPrediction>& predictions, const std::vector<Target>& targets) {
  MetricsReport r;
  r.label_names = names;
  r.multi_label = multi_label;
  r.example_count = targets.size();
  const std::size_t L = names.size();

  LabelRows truth;
  truth.reserve(targets.size());
  for (const auto& t : targets) truth.push_back(t.labels);
  const LabelRows predicted = to_rows(predictions, L);
  const ConfusionCounts cc = confusion(predicted, truth, L);
  r.counts = cc.labels;
  for (const auto& c : cc.labels) r.per_label.push_back(metrics(c));
  r.macro = mean_of(r.per_label);

  const LabelCounts pooled = cc.pooled();
  const LabelMetrics pooled_metrics = metrics(pooled);
  r.hamming_accuracy = pooled_metrics.accuracy.value;

  std::size_t exact = 0, argmax_hit = 0;
  for (std::size_t n = 0; n < targets.size(); ++n) {
    if (predicted[n] == truth[n]) ++exact;
    const auto& probs = predictions[n].probabilities;
    const auto best = static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    if (best < L && truth[n][best]) ++argmax_hit;
  }
  r.micro = pooled_metrics;
  r.micro.accuracy = ratio(static_cast<double>(exact), static_cast<double>(targets.size()));
  r.exact_set_accuracy = r.micro.accuracy.value;
  r.argmax_accuracy = targets.empty() ? 0.0 : static_cast<double>(argmax_hit) / static_cast<double>(targets.size());

  double auc_sum = 0;
  std::size_t auc_n = 0;
  for (std::size_t l = 0; l < L; ++l) {
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    for (std::size_t n = 0; n < targets.size(); ++n) {
      scores.push_back(predictions[n].probabilities.at(l));
      labels.push_back(truth[n][l]);
    }
    const auto pos = std::count(labels.begin(), labels.end(), 1);
    if (pos == 0 || static_cast<std::size_t>(pos) == labels.size()) {
      r.auc.push_back(std::nullopt);
      continue;
    }
    const double a = auc_roc(scores, labels);
    r.auc.push_back(a);
    auc_sum += a;
    ++auc_n;
  }
  if (auc_n > 0) r.macro_auc = auc_sum / static_cast<double>(auc_n);
  return r;
}

}  // namespace

MetricsReport build_report(const std::vector<std::string>& label_names, bool multi_label,
                           const std::vector<IntentPrediction>& predictions, const std::vector<Target>& targets,
                           const std::vector<Polarity>& polarities) {
  if (predictions.size() != targets.size()) throw std::invalid_argument("predictions and targets differ in length");
  MetricsReport r = score(label_names, multi_label, predictions, targets);
  if (polarities.empty()) return r;
  if (polarities.size() != targets.size()) throw std::invalid_argument("polarities and targets differ in length");
  std::map<Polarity, std::pair<std::vector<IntentPrediction>, std::vector<Target>>> slices;
  for (std::size_t n = 0; n < targets.size(); ++n) {
    slices[polarities[n]].first.push_back(predictions[n]);
    slices[polarities[n]].second.push_back(targets[n]);
  }
  for (const auto& [polarity, slice] : slices) {
    r.per_sentiment.emplace(std::string(to_string(polarity)),
                            score(label_names, multi_label, slice.first, slice.second));
  }
  return r;
}

MetricsReport evaluate(const TrainedModel& model, const std::vector<Example>& test_set) {
  for (const auto& e : test_set) {
    const auto& id = e.source.conversation_id;
    if (model.train_conversations.count(id) || model.validation_conversations.count(id)) {
      throw DataError("leakage: test conversation " + id + " was used to train the model");
    }
  }
  std::vector<IntentPrediction> predictions;
  std::vector<Target> targets;
  std::vector<Polarity> polarities;
  for (const auto& e : test_set) {
    predictions.push_back(predict(model, e.input));
    targets.push_back(e.target);
    polarities.push_back(e.polarity);
  }
  return build_report(model.labels.names, model.multi_label(), predictions, targets, polarities);
}

namespace {

Json metric_json(const Metric& m) { return m.value; }

Json label_metrics_json(const LabelMetrics& m) {
  Json j{{"accuracy", metric_json(m.accuracy)},
         {"precision", metric_json(m.precision)},
         {"recall", metric_json(m.recall)},
         {"f1", metric_json(m.f1)}};
  Json flags = Json::array();
  if (m.accuracy.zero_division) flags.push_back("accuracy");
  if (m.precision.zero_division) flags.push_back("precision");
  if (m.recall.zero_division) flags.push_back("recall");
  if (m.f1.zero_division) flags.push_back("f1");
  if (!flags.empty()) j["zero_division"] = flags;
  return j;
}

}  // namespace

Json to_json(const MetricsReport& r) {
  Json labels = Json::array();
  for (std::size_t l = 0; l < r.label_names.size(); ++l) {
    Json row{{"label", r.label_names[l]},
             {"tp", r.counts[l].tp},
             {"fp", r.counts[l].fp},
             {"fn", r.counts[l].fn},
             {"tn", r.counts[l].tn}};
    const Json metrics_row = label_metrics_json(r.per_label[l]);
    for (const auto& [k, v] : metrics_row.items()) row[k] = v;
    row["auc"] = r.auc[l] ? Json(*r.auc[l]) : Json(nullptr);
    labels.push_back(std::move(row));
  }
  Json j{{"multi_label", r.multi_label},
         {"example_count", r.example_count},
         {"labels", labels},
         {"micro", label_metrics_json(r.micro)},
         {"macro", label_metrics_json(r.macro)},
         {"macro_auc", r.macro_auc ? Json(*r.macro_auc) : Json(nullptr)},
         {"exact_set_accuracy", r.exact_set_accuracy},
         {"argmax_accuracy", r.argmax_accuracy},
         {"hamming_accuracy", r.hamming_accuracy}};
  if (!r.per_sentiment.empty()) {
    Json slices = Json::object();
    for (const auto& [name, sub] : r.per_sentiment) slices[name] = to_json(sub);
    j["per_sentiment"] = slices;
  }
  return j;
}

namespace {

std::string fixed(double v) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(6);
  out << v;
  return out.str();
}

void csv_row(std::ostringstream& out, const std::string& name, const LabelMetrics& m, const LabelCounts* c,
             const std::optional<double>& auc) {
  out << name << ",";
  if (c) out << c->tp << "," << c->fp << "," << c->fn << "," << c->tn;
  else out << ",,,";
  out << "," << fixed(m.accuracy.value) << "," << fixed(m.precision.value) << "," << fixed(m.recall.value) << ","
      << fixed(m.f1.value) << "," << (auc ? fixed(*auc) : std::string()) << "\n";
}

}  // namespace

std::string metrics_csv(const MetricsReport& r) {
  std::ostringstream out;
  out << "label,tp,fp,fn,tn,accuracy,precision,recall,f1,auc\n";
  for (std::size_t l = 0; l < r.label_names.size(); ++l) csv_row(out, r.label_names[l], r.per_label[l], &r.counts[l], r.auc[l]);
  csv_row(out, "micro", r.micro, nullptr, std::nullopt);
  csv_row(out, "macro", r.macro, nullptr, r.macro_auc);
  return out.str();
}

FeedbackCheck feedback_sentiment_check(const std::vector<IntentLabeling>& labelings,
                                       const std::vector<SentimentResult>& sentiments, const ConsolidationMap& map) {
  if (labelings.size() != sentiments.size()) throw std::invalid_argument("labelings and sentiments differ in length");
  FeedbackCheck f;
  std::size_t correct = 0;
  for (std::size_t n = 0; n < labelings.size(); ++n) {
    bool pos = false, neg = false;
    for (const auto& t : labelings[n].raw_tags) {
      pos = pos || map.feedback_positive.count(t);
      neg = neg || map.feedback_negative.count(t);
    }
    if (!pos && !neg) continue;
    if (pos && neg) {
      ++f.ambiguous;
      continue;
    }
    const std::size_t truth = pos ? 0 : 1;
    const Polarity p = sentiments[n].polarity;
    const std::size_t predicted = p == Polarity::Positive ? 0 : p == Polarity::Negative ? 1 : 2;
    ++f.confusion[truth][predicted];
    ++f.evaluated;
    if (truth == predicted) ++correct;
  }
  if (f.evaluated == 0) throw DataError("no feedback-tagged records to check sentiment against");
  f.accuracy = static_cast<double>(correct) / static_cast<double>(f.evaluated);
  return f;
}

Json to_json(const FeedbackCheck& f) {
  auto row = [](const std::array<std::size_t, 3>& r) {
    return Json{{"positive", r[0]}, {"negative", r[1]}, {"neutral", r[2]}};
  };
  return Json{{"accuracy", f.accuracy},
              {"evaluated", f.evaluated},
              {"ambiguous", f.ambiguous},
              {"confusion", Json{{"positive", row(f.confusion[0])}, {"negative", row(f.confusion[1])}}}};
}

}  // namespace intentpipe
