#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "intentpipe/corpus.h"
#include "intentpipe/io.h"

namespace intentpipe {

// Declaration order is the single-label priority order.
enum class Category { Question, Answer, Feedback, FurtherInformation, NoInformation };

inline constexpr std::size_t kCategoryCount = 5;
inline constexpr std::array<Category, kCategoryCount> kAllCategories = {
    Category::Question, Category::Answer, Category::Feedback, Category::FurtherInformation,
    Category::NoInformation};

std::string_view to_string(Category c);
std::optional<Category> parse_category(std::string_view s);

using CategorySet = std::set<Category>;

struct ConsolidationMap {
  std::string version;
  std::map<std::string, Category> mapping;
  std::set<std::string> feedback_positive;  // tags marking positive feedback
  std::set<std::string> feedback_negative;

  // data/taxonomy/consolidation_map.json, compiled in.
  static ConsolidationMap defaults();
  static ConsolidationMap from_json(const Json& j);
  static ConsolidationMap load(const std::filesystem::path& path);
  Json to_json() const;

  // Throws ConfigError listing every observed tag without a mapping. Returns
  // one warning per category that no tag maps onto.
  std::vector<std::string> check_against(const CorpusStats& stats) const;
};

// Union of per-tag images; {} maps to {NoInformation}. Throws ConfigError
// naming the first unmapped tag.
CategorySet consolidate(const std::vector<std::string>& raw_tags, const ConsolidationMap& map);

struct IntentLabeling {
  UtteranceKey source;
  std::vector<std::string> raw_tags;
  CategorySet categories;

  bool operator==(const IntentLabeling&) const = default;
};

IntentLabeling label_utterance(const UtteranceKey& source, const std::vector<std::string>& raw_tags,
                               const ConsolidationMap& map);

struct LabelDistribution {
  std::vector<std::string> tags;  // sorted
  std::vector<std::size_t> tag_counts;
  std::array<std::size_t, kCategoryCount> category_counts{};
  std::vector<std::vector<std::size_t>> cooccurrence;  // tags x tags, diagonal = tag_counts
  std::size_t utterance_count = 0;
};

LabelDistribution label_distribution(const std::vector<IntentLabeling>& labelings);

Json to_json(const LabelDistribution& d);
// Per-tag rows with co-occurrence columns, then per-category rows.
std::string to_csv(const LabelDistribution& d);

enum class LabelMode { RawMultiLabel, ConsolidatedMultiLabel, ConsolidatedSingle };

std::string_view to_string(LabelMode m);
std::optional<LabelMode> parse_label_mode(std::string_view s);

struct LabelSpace {
  LabelMode mode = LabelMode::ConsolidatedMultiLabel;
  std::vector<std::string> names;

  // Raw mode uses the sorted tag vocabulary; consolidated modes use the five
  // category names in priority order.
  static LabelSpace make(LabelMode mode, const std::vector<std::string>& tag_vocabulary = {});

  bool multi_label() const { return mode != LabelMode::ConsolidatedSingle; }
  std::size_t size() const { return names.size(); }

  Json to_json() const;
  static LabelSpace from_json(const Json& j);
  bool operator==(const LabelSpace&) const = default;
};

struct Target {
  std::vector<std::uint8_t> labels;  // 0/1 per label; one-hot in single mode
  std::size_t class_index = 0;       // single mode only

  bool operator==(const Target&) const = default;
};

// Raw and consolidated multi-label modes give a multi-hot vector; single mode
// picks the highest-priority category present.
Target target_vector(const IntentLabeling& labeling, const LabelSpace& space);

Json to_json(const IntentLabeling& l);
IntentLabeling intent_labeling_from_json(const Json& j);

}  // namespace intentpipe
