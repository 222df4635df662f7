#include "intentpipe/taxonomy.h"

#include <algorithm>
#include <sstream>

#include "intentpipe/error.h"
#include "intentpipe/resources.h"

namespace intentpipe {

namespace {

constexpr std::pair<Category, std::string_view> kCategoryNames[] = {
    {Category::Question, "Question"},
    {Category::Answer, "Answer"},
    {Category::Feedback, "Feedback"},
    {Category::FurtherInformation, "FurtherInformation"},
    {Category::NoInformation, "NoInformation"},
};

std::string squash(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '_' || c == ' ' || c == '-') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

std::string_view to_string(Category c) {
  for (const auto& [cat, name] : kCategoryNames) {
    if (cat == c) return name;
  }
  return "NoInformation";
}

std::optional<Category> parse_category(std::string_view s) {
  const std::string key = squash(s);
  for (const auto& [cat, name] : kCategoryNames) {
    if (squash(name) == key) return cat;
  }
  return std::nullopt;
}

ConsolidationMap ConsolidationMap::defaults() {
  static const ConsolidationMap map = from_json(Json::parse(require_resource("taxonomy/consolidation_map.json")));
  return map;
}

ConsolidationMap ConsolidationMap::from_json(const Json& j) {
  ConsolidationMap m;
  try {
    m.version = j.at("version").get<std::string>();
    for (const auto& [tag, cat] : j.at("mapping").items()) {
      auto c = parse_category(cat.get<std::string>());
      if (!c) throw ConfigError("consolidation map: unknown category '" + cat.get<std::string>() + "'");
      const auto normalized = parse_tags(tag);
      if (normalized.size() != 1) throw ConfigError("consolidation map: invalid tag '" + tag + "'");
      m.mapping[normalized.front()] = *c;
    }
    for (const char* key : {"feedback_positive", "feedback_negative"}) {
      auto& target = std::string_view(key) == "feedback_positive" ? m.feedback_positive : m.feedback_negative;
      if (auto it = j.find(key); it != j.end()) {
        for (const auto& t : *it) {
          for (auto& tag : parse_tags(t.get<std::string>())) target.insert(std::move(tag));
        }
      }
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("consolidation map: ") + e.what());
  }
  for (const auto& t : m.feedback_positive) {
    if (m.feedback_negative.count(t)) throw ConfigError("consolidation map: tag '" + t + "' is both feedback polarities");
  }
  return m;
}

ConsolidationMap ConsolidationMap::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path));
}

Json ConsolidationMap::to_json() const {
  Json mapping_json = Json::object();
  for (const auto& [tag, cat] : mapping) mapping_json[tag] = std::string(to_string(cat));
  return Json{{"version", version},
              {"mapping", mapping_json},
              {"feedback_positive", std::vector<std::string>(feedback_positive.begin(), feedback_positive.end())},
              {"feedback_negative", std::vector<std::string>(feedback_negative.begin(), feedback_negative.end())}};
}

std::vector<std::string> ConsolidationMap::check_against(const CorpusStats& stats) const {
  std::vector<std::string> missing;
  for (const auto& [tag, count] : stats.tag_vocabulary) {
    if (!mapping.count(tag)) missing.push_back(tag);
  }
  if (!missing.empty()) {
    std::string msg = "consolidation map '" + version + "' has no entry for tag(s):";
    for (const auto& t : missing) msg += " " + t;
    throw ConfigError(msg);
  }
  std::vector<std::string> warnings;
  for (Category c : kAllCategories) {
    const bool covered = std::any_of(mapping.begin(), mapping.end(), [&](const auto& kv) { return kv.second == c; });
    if (!covered) warnings.push_back("no tag maps onto category " + std::string(to_string(c)));
  }
  return warnings;
}

CategorySet consolidate(const std::vector<std::string>& raw_tags, const ConsolidationMap& map) {
  if (raw_tags.empty()) return {Category::NoInformation};
  CategorySet out;
  for (const auto& tag : raw_tags) {
    auto it = map.mapping.find(tag);
    if (it == map.mapping.end()) throw ConfigError("unmapped tag: " + tag);
    out.insert(it->second);
  }
  return out;
}

IntentLabeling label_utterance(const UtteranceKey& source, const std::vector<std::string>& raw_tags,
                               const ConsolidationMap& map) {
  IntentLabeling l;
  l.source = source;
  l.raw_tags = raw_tags;
  std::sort(l.raw_tags.begin(), l.raw_tags.end());
  l.raw_tags.erase(std::unique(l.raw_tags.begin(), l.raw_tags.end()), l.raw_tags.end());
  l.categories = consolidate(l.raw_tags, map);
  return l;
}

LabelDistribution label_distribution(const std::vector<IntentLabeling>& labelings) {
  LabelDistribution d;
  std::set<std::string> tags;
  for (const auto& l : labelings) tags.insert(l.raw_tags.begin(), l.raw_tags.end());
  d.tags.assign(tags.begin(), tags.end());
  const std::size_t n = d.tags.size();
  d.tag_counts.assign(n, 0);
  d.cooccurrence.assign(n, std::vector<std::size_t>(n, 0));
  d.utterance_count = labelings.size();

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[d.tags[i]] = i;

  for (const auto& l : labelings) {
    std::vector<std::size_t> ids;
    for (const auto& t : std::set<std::string>(l.raw_tags.begin(), l.raw_tags.end())) ids.push_back(index.at(t));
    for (std::size_t a : ids) {
      ++d.tag_counts[a];
      for (std::size_t b : ids) ++d.cooccurrence[a][b];
    }
    for (Category c : l.categories) ++d.category_counts[static_cast<std::size_t>(c)];
  }
  return d;
}

Json to_json(const LabelDistribution& d) {
  Json tags = Json::object();
  for (std::size_t i = 0; i < d.tags.size(); ++i) tags[d.tags[i]] = d.tag_counts[i];
  Json cats = Json::object();
  for (Category c : kAllCategories) cats[std::string(to_string(c))] = d.category_counts[static_cast<std::size_t>(c)];
  return Json{{"utterance_count", d.utterance_count},
              {"tags", d.tags},
              {"tag_counts", tags},
              {"category_counts", cats},
              {"cooccurrence", d.cooccurrence}};
}

std::string to_csv(const LabelDistribution& d) {
  std::ostringstream out;
  out << "kind,label,count";
  for (const auto& t : d.tags) out << ",with_" << t;
  out << "\n";
  for (std::size_t i = 0; i < d.tags.size(); ++i) {
    out << "tag," << d.tags[i] << "," << d.tag_counts[i];
    for (std::size_t j = 0; j < d.tags.size(); ++j) out << "," << d.cooccurrence[i][j];
    out << "\n";
  }
  for (Category c : kAllCategories) {
    out << "category," << to_string(c) << "," << d.category_counts[static_cast<std::size_t>(c)];
    for (std::size_t j = 0; j < d.tags.size(); ++j) out << ",";
    out << "\n";
  }
  return out.str();
}

std::string_view to_string(LabelMode m) {
  switch (m) {
    case LabelMode::RawMultiLabel: return "raw";
    case LabelMode::ConsolidatedMultiLabel: return "consolidated";
    case LabelMode::ConsolidatedSingle: return "single";
  }
  return "consolidated";
}

std::optional<LabelMode> parse_label_mode(std::string_view s) {
  if (s == "raw") return LabelMode::RawMultiLabel;
  if (s == "consolidated") return LabelMode::ConsolidatedMultiLabel;
  if (s == "single") return LabelMode::ConsolidatedSingle;
  return std::nullopt;
}

LabelSpace LabelSpace::make(LabelMode mode, const std::vector<std::string>& tag_vocabulary) {
  LabelSpace s;
  s.mode = mode;
  if (mode == LabelMode::RawMultiLabel) {
    std::set<std::string> sorted(tag_vocabulary.begin(), tag_vocabulary.end());
    s.names.assign(sorted.begin(), sorted.end());
    if (s.names.empty()) throw ConfigError("raw label mode needs a non-empty tag vocabulary");
  } else {
    for (Category c : kAllCategories) s.names.emplace_back(to_string(c));
  }
  return s;
}

Json LabelSpace::to_json() const { return Json{{"mode", std::string(to_string(mode))}, {"names", names}}; }

LabelSpace LabelSpace::from_json(const Json& j) {
  LabelSpace s;
  auto mode = parse_label_mode(j.at("mode").get<std::string>());
  if (!mode) throw DataError("label space: unknown mode");
  s.mode = *mode;
  s.names = j.at("names").get<std::vector<std::string>>();
  return s;
}

Target target_vector(const IntentLabeling& labeling, const LabelSpace& space) {
  Target t;
  t.labels.assign(space.size(), 0);
  if (space.mode == LabelMode::RawMultiLabel) {
    for (const auto& tag : labeling.raw_tags) {
      auto it = std::lower_bound(space.names.begin(), space.names.end(), tag);
      if (it == space.names.end() || *it != tag) throw ConfigError("tag outside the label space: " + tag);
      t.labels[static_cast<std::size_t>(it - space.names.begin())] = 1;
    }
  } else if (space.mode == LabelMode::ConsolidatedMultiLabel) {
    for (Category c : labeling.categories) t.labels[static_cast<std::size_t>(c)] = 1;
  } else {
    // std::set orders by declaration, which is the priority order.
    const Category top = labeling.categories.empty() ? Category::NoInformation : *labeling.categories.begin();
    t.class_index = static_cast<std::size_t>(top);
    t.labels[t.class_index] = 1;
  }
  return t;
}

Json to_json(const IntentLabeling& l) {
  Json cats = Json::array();
  for (Category c : l.categories) cats.push_back(std::string(to_string(c)));
  return Json{{"conversation_id", l.source.conversation_id},
              {"utterance_id", l.source.utterance_id},
              {"raw_tags", l.raw_tags},
              {"categories", cats}};
}

IntentLabeling intent_labeling_from_json(const Json& j) {
  IntentLabeling l;
  try {
    l.source = {j.at("conversation_id").get<std::string>(), j.at("utterance_id").get<std::string>()};
    l.raw_tags = j.at("raw_tags").get<std::vector<std::string>>();
    for (const auto& c : j.at("categories")) {
      auto cat = parse_category(c.get<std::string>());
      if (!cat) throw DataError("labeling: unknown category");
      l.categories.insert(*cat);
    }
  } catch (const Json::exception& e) {
    throw DataError(std::string("labeling: ") + e.what());
  }
  return l;
}

}  // namespace intentpipe
