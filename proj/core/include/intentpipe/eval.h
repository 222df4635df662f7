#pragma once

#include <cstddef>
#include <cstdint>
#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "intentpipe/features.h"
#include "intentpipe/io.h"
#include "intentpipe/model.h"
#include "intentpipe/taxonomy.h"

namespace intentpipe {

struct LabelCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  LabelCounts& operator+=(const LabelCounts& o);
  bool operator==(const LabelCounts&) const = default;
};

struct ConfusionCounts {
  std::vector<LabelCounts> labels;
  std::size_t examples = 0;

  LabelCounts pooled() const;
};

using LabelRows = std::vector<std::vector<std::uint8_t>>;

// Per-label binary counting over 0/1 rows. Throws std::invalid_argument when
// the row counts differ or a row is not label_count wide.
ConfusionCounts confusion(const LabelRows& predictions, const LabelRows& targets, std::size_t label_count);

struct Metric {
  double value = 0;
  bool zero_division = false;  // 0/0 denominator; value is then 0
};

struct LabelMetrics {
  Metric accuracy, precision, recall, f1;
};

LabelMetrics metrics(const LabelCounts& c);

// Rank (Mann-Whitney) formulation with average ranks for ties. Throws
// std::invalid_argument("undefined AUC") unless both classes are present.
double auc_roc(const std::vector<double>& scores, const std::vector<std::uint8_t>& targets);

struct MetricsReport {
  std::vector<std::string> label_names;
  bool multi_label = true;
  std::size_t example_count = 0;
  std::vector<LabelCounts> counts;
  std::vector<LabelMetrics> per_label;
  std::vector<std::optional<double>> auc;  // empty when a label has one class only
  // Precision, recall and F1 from pooled counts; accuracy is exact-set.
  LabelMetrics micro;
  LabelMetrics macro;
  std::optional<double> macro_auc;
  double exact_set_accuracy = 0;
  double argmax_accuracy = 0;  // argmax label is one of the true labels
  double hamming_accuracy = 0; // accuracy over pooled per-label decisions
  std::map<std::string, MetricsReport> per_sentiment;
};

// Scores predictions against targets; `polarities` (may be empty) adds
// per-sentiment sub-reports.
MetricsReport build_report(const std::vector<std::string>& label_names, bool multi_label,
                           const std::vector<IntentPrediction>& predictions, const std::vector<Target>& targets,
                           const std::vector<Polarity>& polarities = {});

// Throws DataError("leakage: ...") when a test conversation appears in the
// model's training or validation manifest.
MetricsReport evaluate(const TrainedModel& model, const std::vector<Example>& test_set);

Json to_json(const MetricsReport& r);
// One row per label plus micro and macro rows.
std::string metrics_csv(const MetricsReport& r);

struct FeedbackCheck {
  double accuracy = 0;
  std::size_t evaluated = 0;
  std::size_t ambiguous = 0;  // carried both positive and negative feedback tags; not scored
  // truth (positive, negative) x predicted (positive, negative, neutral)
  std::array<std::array<std::size_t, 3>, 2> confusion{};
};

// Ground truth comes from the map's feedback tag lists, prediction from the
// lexicon polarity; a neutral prediction counts as wrong. Throws DataError
// when no labeling carries a feedback tag.
FeedbackCheck feedback_sentiment_check(const std::vector<IntentLabeling>& labelings,
                                       const std::vector<SentimentResult>& sentiments, const ConsolidationMap& map);

Json to_json(const FeedbackCheck& f);

}  // namespace intentpipe
