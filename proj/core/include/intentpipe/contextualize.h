#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "intentpipe/corpus.h"
#include "intentpipe/curation.h"
#include "intentpipe/features.h"
#include "intentpipe/io.h"
#include "intentpipe/model.h"
#include "intentpipe/taxonomy.h"

namespace intentpipe {

struct ContextualizedRecord {
  UtteranceKey source;
  Actor actor = Actor::User;
  std::size_t position = 0;
  std::size_t conversation_length = 0;
  std::vector<std::string> tokens;  // kept tokens
  std::vector<std::string> lemmas;  // kept lemmas
  SentimentResult sentiment;
  std::vector<std::pair<std::string, std::size_t>> top_words;
  std::vector<std::string> entity_types;  // sorted, unique
  IntentLabeling labeling;
  CategorySet previous_categories;  // empty at position 0

  UtteranceContext context() const { return {position, conversation_length, actor}; }
};

// Joins the four inputs on (conversation_id, utterance_id), one record per
// corpus utterance in corpus order. Throws DataError naming the first key
// that is missing from, duplicated in, or unknown to any input.
std::vector<ContextualizedRecord> contextualize(const std::vector<Conversation>& corpus,
                                                const std::vector<CleanUtterance>& clean,
                                                const std::vector<FeatureBundle>& bundles,
                                                const std::vector<IntentLabeling>& labelings,
                                                std::size_t top_k = 5);

Json to_json(const ContextualizedRecord& r);
ContextualizedRecord contextualized_record_from_json(const Json& j);

// One row per record with flattened columns.
std::string records_csv(const std::vector<ContextualizedRecord>& records);

struct RankedFeature {
  std::size_t feature_index = 0;
  std::string name;
  double weight = 0;
  double magnitude = 0;
};

struct AttributionReport {
  std::string model_version;
  std::string generated_at;
  std::vector<std::string> labels;
  // Per label, nonzero weights only, |weight| descending then name ascending.
  std::vector<std::vector<RankedFeature>> rankings;
};

// Weight-magnitude attribution of a linear head. Throws std::invalid_argument
// for a non-linear head or when feature_names does not match the input width.
AttributionReport reverse_feature_report(const TrainedModel& model, const std::vector<std::string>& feature_names,
                                         std::string model_version, std::string generated_at,
                                         std::optional<std::size_t> top_n = std::nullopt);

Json to_json(const AttributionReport& r);
// Plain-text redesign report listing the leading features per label.
std::string attribution_text(const AttributionReport& r, std::size_t per_label = 10);

}  // namespace intentpipe
