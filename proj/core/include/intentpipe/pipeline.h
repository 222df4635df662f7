#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "intentpipe/io.h"
#include "intentpipe/model.h"

namespace intentpipe {

namespace fs = std::filesystem;

// Conversation-level split. The test set has test_count conversations (or
// round(test_fraction * N) when test_count is unset); validation_fraction
// applies to what remains.
struct SplitSpec {
  std::optional<std::size_t> test_count = 1000;
  double test_fraction = 0.1;
  double validation_fraction = 0.1;
  std::uint64_t seed = 13;

  void validate() const;
  static SplitSpec from_json(const Json& j);
  Json to_json() const;
  bool operator==(const SplitSpec&) const = default;
};

struct DataSplit {
  SplitSpec spec;
  std::vector<std::string> train, validation, test;  // sorted conversation ids

  // Throws ConfigError when the corpus is too small for the requested sizes.
  static DataSplit make(std::vector<std::string> conversation_ids, const SplitSpec& spec);
  Json to_json() const;
  static DataSplit from_json(const Json& j);
};

// Contents of a `--config` file for featurize and train: {"split": ...,
// "train": ...}; either section may be absent.
struct RunConfig {
  SplitSpec split;
  TrainConfig train;

  static RunConfig from_json(const Json& j);
  static RunConfig load(const fs::path& path);
  Json to_json() const;
};

// Value of PIPELINE_SEED, if set. Throws ConfigError when it is not an
// unsigned integer.
std::optional<std::uint64_t> seed_override();

// Applies PIPELINE_SEED to the split and training seeds.
RunConfig with_seed_override(RunConfig config);

struct StageOutcome {
  bool cached = false;
  Json summary = Json::object();
};

struct StageOptions {
  bool from_scratch = false;    // recompute even when the manifest says up to date
  std::ostream* log = nullptr;  // human-readable progress
};

StageOutcome run_ingest(const fs::path& corpus, const fs::path& field_map, const fs::path& out,
                        const StageOptions& options = {});

// Reads corpus.json from `in`; the returned summary is the stats object.
StageOutcome run_stats(const fs::path& in, const StageOptions& options = {});

StageOutcome run_curate(const fs::path& in, const fs::path& config, const fs::path& out,
                        const StageOptions& options = {});

// `config` may be empty; the default split is then used.
StageOutcome run_featurize(const fs::path& in, const fs::path& lexicons, const fs::path& out,
                           const fs::path& config = {}, const StageOptions& options = {});

StageOutcome run_contextualize(const fs::path& in, const fs::path& map, const fs::path& out,
                               const StageOptions& options = {});

struct TrainOverrides {
  std::optional<Head> head;
  std::optional<LabelMode> label_mode;
  bool per_sentiment = false;
};

StageOutcome run_train(const fs::path& in, const fs::path& config, const fs::path& out,
                       const TrainOverrides& overrides = {}, const StageOptions& options = {});

StageOutcome run_evaluate(const fs::path& model, const fs::path& in, const fs::path& out,
                          const StageOptions& options = {});

StageOutcome run_report(const fs::path& in, const fs::path& out, const StageOptions& options = {});

// Artifact names shared by the stages.
namespace artifact {
inline constexpr const char* kCorpus = "corpus.json";
inline constexpr const char* kDiagnostics = "ingest_diagnostics.json";
inline constexpr const char* kStats = "stats.json";
inline constexpr const char* kClean = "clean.json";
inline constexpr const char* kSplit = "split.json";
inline constexpr const char* kVocab = "vocab.json";
inline constexpr const char* kFeatures = "features.json";
inline constexpr const char* kFeatureSpace = "feature_space.json";
inline constexpr const char* kLabels = "labels.json";
inline constexpr const char* kMap = "consolidation_map.json";
inline constexpr const char* kRecords = "records.json";
inline constexpr const char* kDistribution = "distribution.json";
inline constexpr const char* kDistributionCsv = "distribution.csv";
inline constexpr const char* kModel = "model.json";
inline constexpr const char* kHistory = "history.json";
inline constexpr const char* kMetrics = "metrics.json";
inline constexpr const char* kMetricsCsv = "metrics.csv";
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kRunLog = "run.log";
}  // namespace artifact

}  // namespace intentpipe
