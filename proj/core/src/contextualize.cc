#include "intentpipe/contextualize.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "intentpipe/error.h"

namespace intentpipe {

namespace {

template <typename T>
std::map<UtteranceKey, const T*> index_by_key(const std::vector<T>& items, const char* what,
                                              UtteranceKey (*key)(const T&)) {
  std::map<UtteranceKey, const T*> out;
  for (const auto& item : items) {
    const UtteranceKey k = key(item);
    if (!out.emplace(k, &item).second) {
      throw DataError(std::string("duplicate key in ") + what + ": " + to_string(k));
    }
  }
  return out;
}

UtteranceKey clean_key(const CleanUtterance& c) { return c.source; }
UtteranceKey bundle_key(const FeatureBundle& b) { return b.source; }
UtteranceKey label_key(const IntentLabeling& l) { return l.source; }

template <typename T>
const T& lookup(const std::map<UtteranceKey, const T*>& index, const UtteranceKey& key, const char* what) {
  auto it = index.find(key);
  if (it == index.end()) throw DataError(std::string("missing key in ") + what + ": " + to_string(key));
  return *it->second;
}

std::string join(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out.push_back(sep);
    out += items[i];
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

std::vector<std::string> category_names(const CategorySet& s) {
  std::vector<std::string> out;
  for (Category c : s) out.emplace_back(to_string(c));
  return out;
}

CategorySet categories_from_json(const Json& j) {
  CategorySet out;
  for (const auto& c : j) {
    auto cat = parse_category(c.get<std::string>());
    if (!cat) throw DataError("record: unknown category " + c.get<std::string>());
    out.insert(*cat);
  }
  return out;
}

}  // namespace

std::vector<ContextualizedRecord> contextualize(const std::vector<Conversation>& corpus,
                                                const std::vector<CleanUtterance>& clean,
                                                const std::vector<FeatureBundle>& bundles,
                                                const std::vector<IntentLabeling>& labelings,
                                                std::size_t top_k) {
  const auto clean_index = index_by_key(clean, "curated utterances", clean_key);
  const auto bundle_index = index_by_key(bundles, "feature bundles", bundle_key);
  const auto label_index = index_by_key(labelings, "labelings", label_key);

  std::vector<ContextualizedRecord> out;
  std::set<UtteranceKey> seen;
  for (const auto& conv : corpus) {
    CategorySet previous;
    for (const auto& u : conv.utterances) {
      const UtteranceKey key{conv.conversation_id, u.utterance_id};
      if (!seen.insert(key).second) throw DataError("duplicate key in corpus: " + to_string(key));
      const auto& c = lookup(clean_index, key, "curated utterances");
      const auto& b = lookup(bundle_index, key, "feature bundles");
      const auto& l = lookup(label_index, key, "labelings");

      ContextualizedRecord r;
      r.source = key;
      r.actor = u.actor;
      r.position = u.position;
      r.conversation_length = conv.utterances.size();
      r.tokens = c.tokens;
      r.lemmas = c.kept_lemmas();
      r.sentiment = b.sentiment;
      std::vector<std::pair<std::string, std::size_t>> freq(b.word_freq.begin(), b.word_freq.end());
      std::stable_sort(freq.begin(), freq.end(), [](const auto& a, const auto& z) { return a.second > z.second; });
      if (freq.size() > top_k) freq.resize(top_k);
      r.top_words = std::move(freq);
      std::set<std::string> types;
      for (const auto& e : b.entities) types.insert(e.entity_type);
      r.entity_types.assign(types.begin(), types.end());
      r.labeling = l;
      r.previous_categories = previous;
      previous = l.categories;
      out.push_back(std::move(r));
    }
  }

  auto check_unknown = [&](const auto& index, const char* what) {
    for (const auto& [k, v] : index) {
      if (!seen.count(k)) throw DataError(std::string("key in ") + what + " not found in corpus: " + to_string(k));
    }
  };
  check_unknown(clean_index, "curated utterances");
  check_unknown(bundle_index, "feature bundles");
  check_unknown(label_index, "labelings");
  return out;
}

Json to_json(const ContextualizedRecord& r) {
  Json top = Json::array();
  for (const auto& [w, n] : r.top_words) top.push_back(Json::array({w, n}));
  return Json{{"conversation_id", r.source.conversation_id},
              {"utterance_id", r.source.utterance_id},
              {"actor", std::string(to_string(r.actor))},
              {"position", r.position},
              {"conversation_length", r.conversation_length},
              {"tokens", r.tokens},
              {"lemmas", r.lemmas},
              {"sentiment",
               Json{{"positive_hits", r.sentiment.positive_hits},
                    {"negative_hits", r.sentiment.negative_hits},
                    {"score", r.sentiment.score},
                    {"polarity", std::string(to_string(r.sentiment.polarity))}}},
              {"top_words", top},
              {"entity_types", r.entity_types},
              {"raw_tags", r.labeling.raw_tags},
              {"categories", category_names(r.labeling.categories)},
              {"previous_categories", category_names(r.previous_categories)}};
}

ContextualizedRecord contextualized_record_from_json(const Json& j) {
  ContextualizedRecord r;
  try {
    r.source = {j.at("conversation_id").get<std::string>(), j.at("utterance_id").get<std::string>()};
    auto actor = parse_actor(j.at("actor").get<std::string>());
    if (!actor) throw DataError("record: unknown actor");
    r.actor = *actor;
    r.position = j.at("position").get<std::size_t>();
    r.conversation_length = j.at("conversation_length").get<std::size_t>();
    r.tokens = j.at("tokens").get<std::vector<std::string>>();
    r.lemmas = j.at("lemmas").get<std::vector<std::string>>();
    const auto& s = j.at("sentiment");
    r.sentiment.positive_hits = s.at("positive_hits").get<int>();
    r.sentiment.negative_hits = s.at("negative_hits").get<int>();
    r.sentiment.score = s.at("score").get<int>();
    auto pol = parse_polarity(s.at("polarity").get<std::string>());
    if (!pol) throw DataError("record: unknown polarity");
    r.sentiment.polarity = *pol;
    for (const auto& w : j.at("top_words")) r.top_words.emplace_back(w.at(0).get<std::string>(), w.at(1).get<std::size_t>());
    r.entity_types = j.at("entity_types").get<std::vector<std::string>>();
    r.labeling.source = r.source;
    r.labeling.raw_tags = j.at("raw_tags").get<std::vector<std::string>>();
    r.labeling.categories = categories_from_json(j.at("categories"));
    r.previous_categories = categories_from_json(j.at("previous_categories"));
  } catch (const Json::exception& e) {
    throw DataError(std::string("record: ") + e.what());
  }
  return r;
}

std::string records_csv(const std::vector<ContextualizedRecord>& records) {
  std::ostringstream out;
  out << "conversation_id,utterance_id,actor,position,conversation_length,token_count,raw_tags,categories,"
         "previous_categories,sentiment_score,polarity,top_words,entity_types\n";
  for (const auto& r : records) {
    std::vector<std::string> words;
    for (const auto& [w, n] : r.top_words) words.push_back(w + ":" + std::to_string(n));
    out << csv_field(r.source.conversation_id) << "," << csv_field(r.source.utterance_id) << ","
        << to_string(r.actor) << "," << r.position << "," << r.conversation_length << "," << r.tokens.size() << ","
        << join(r.labeling.raw_tags, ' ') << "," << join(category_names(r.labeling.categories), ' ') << ","
        << join(category_names(r.previous_categories), ' ') << "," << r.sentiment.score << ","
        << to_string(r.sentiment.polarity) << "," << csv_field(join(words, ' ')) << ","
        << join(r.entity_types, ' ') << "\n";
  }
  return out.str();
}

AttributionReport reverse_feature_report(const TrainedModel& model, const std::vector<std::string>& feature_names,
                                         std::string model_version, std::string generated_at,
                                         std::optional<std::size_t> top_n) {
  if (model.params.head != Head::Linear) throw std::invalid_argument("attribution needs a linear head");
  const Eigen::MatrixXd& W = model.params.tensors.front();
  if (feature_names.size() != static_cast<std::size_t>(W.cols())) {
    throw std::invalid_argument("feature_names has " + std::to_string(feature_names.size()) +
                                " entries but the model has " + std::to_string(W.cols()) + " features");
  }
  AttributionReport r;
  r.model_version = std::move(model_version);
  r.generated_at = std::move(generated_at);
  r.labels = model.labels.names;
  for (Eigen::Index l = 0; l < W.rows(); ++l) {
    std::vector<RankedFeature> ranked;
    for (Eigen::Index f = 0; f < W.cols(); ++f) {
      const double w = W(l, f);
      if (w == 0.0) continue;
      ranked.push_back({static_cast<std::size_t>(f), feature_names[static_cast<std::size_t>(f)], w, std::abs(w)});
    }
    std::sort(ranked.begin(), ranked.end(), [](const RankedFeature& a, const RankedFeature& b) {
      if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
      if (a.name != b.name) return a.name < b.name;
      return a.feature_index < b.feature_index;
    });
    if (top_n && ranked.size() > *top_n) ranked.resize(*top_n);
    r.rankings.push_back(std::move(ranked));
  }
  return r;
}

Json to_json(const AttributionReport& r) {
  Json labels = Json::array();
  for (std::size_t l = 0; l < r.labels.size(); ++l) {
    Json ranked = Json::array();
    for (const auto& f : r.rankings[l]) {
      ranked.push_back(Json{{"feature", f.name}, {"index", f.feature_index}, {"weight", f.weight}, {"magnitude", f.magnitude}});
    }
    labels.push_back(Json{{"label", r.labels[l]}, {"features", ranked}});
  }
  return Json{{"model_version", r.model_version}, {"generated_at", r.generated_at}, {"labels", labels}};
}

std::string attribution_text(const AttributionReport& r, std::size_t per_label) {
  std::ostringstream out;
  out << "Feature attribution for model " << r.model_version << "\n";
  if (!r.generated_at.empty()) out << "Generated " << r.generated_at << "\n";
  for (std::size_t l = 0; l < r.labels.size(); ++l) {
    out << "\n" << r.labels[l] << "\n";
    const auto& ranked = r.rankings[l];
    if (ranked.empty()) {
      out << "  (no nonzero weights)\n";
      continue;
    }
    for (std::size_t i = 0; i < std::min(per_label, ranked.size()); ++i) {
      const auto& f = ranked[i];
      out << "  " << (i + 1) << ". " << f.name << "  " << (f.weight >= 0 ? "+" : "-") << f.magnitude << "\n";
    }
  }
  return out.str();
}

}  // namespace intentpipe
