#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "intentpipe/corpus.h"
#include "intentpipe/features.h"
#include "intentpipe/io.h"
#include "intentpipe/taxonomy.h"

namespace intentpipe {

enum class Head { Linear, Attention };

std::string_view to_string(Head h);
std::optional<Head> parse_head(std::string_view s);

struct TrainConfig {
  std::size_t max_sequence_length = 384;
  std::size_t batch_size = 16;
  double learning_rate = 5e-5;
  // The step size actually used is learning_rate * lr_scale. A from-scratch
  // linear head needs a far larger step than a pretrained encoder.
  double lr_scale = 100.0;
  double adam_epsilon = 1e-8;
  std::size_t epochs = 5;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::uint64_t seed = 42;
  LabelMode label_mode = LabelMode::ConsolidatedMultiLabel;
  Head head = Head::Linear;
  double decision_threshold = 0.5;
  std::size_t embedding_dim = 16;  // attention head only
  double init_scale = 0.05;        // parameters start uniform in [-init_scale, init_scale]
  bool keyword_features = false;   // adds keyword counts and a verb count

  double effective_learning_rate() const { return learning_rate * lr_scale; }

  // Throws ConfigError when an invariant is violated.
  void validate() const;

  // Absent keys keep their defaults; unknown keys are a ConfigError.
  static TrainConfig from_json(const Json& j);
  Json to_json() const;
  bool operator==(const TrainConfig&) const = default;
};

// Column layout of the linear-head input: TF-IDF block first, then the
// engineered scalars.
struct FeatureLayout {
  std::size_t vocab_size = 0;
  std::vector<std::string> entity_types;  // sorted
  std::vector<std::string> keywords;      // empty unless keyword features are on
  bool verb_count = false;

  static FeatureLayout make(std::size_t vocab_size, std::vector<std::string> entity_types,
                            std::vector<std::string> keywords, const TrainConfig& config);

  std::size_t sentiment_offset() const { return vocab_size; }
  std::size_t polarity_offset() const { return vocab_size + 1; }  // positive, negative
  std::size_t entity_offset() const { return vocab_size + 3; }
  std::size_t turn_offset() const { return entity_offset() + entity_types.size(); }
  std::size_t actor_offset() const { return turn_offset() + 1; }
  std::size_t keyword_offset() const { return actor_offset() + 1; }
  std::size_t verb_offset() const { return keyword_offset() + keywords.size(); }
  std::size_t engineered_width() const { return width() - vocab_size; }
  std::size_t width() const { return verb_offset() + (verb_count ? 1 : 0); }

  // Human-readable column names; needs the vocabulary for the TF-IDF block.
  std::vector<std::string> feature_names(const Vocabulary& vocab) const;

  Json to_json() const;
  static FeatureLayout from_json(const Json& j);
  bool operator==(const FeatureLayout&) const = default;
};

struct ModelInput {
  SparseVector features;               // sorted by column, width = layout.width()
  std::vector<std::uint32_t> tokens;   // vocabulary ids, at most max_sequence_length

  bool operator==(const ModelInput&) const = default;
};

struct UtteranceContext {
  std::size_t position = 0;
  std::size_t conversation_length = 1;
  Actor actor = Actor::User;
};

// `lemmas` are the kept lemmas of the utterance; out-of-vocabulary lemmas are
// dropped before the token sequence is truncated.
ModelInput assemble_vector(const FeatureBundle& bundle, const std::vector<std::string>& lemmas,
                           const UtteranceContext& context, const FeatureLayout& layout, const Vocabulary& vocab,
                           const TrainConfig& config);

struct Example {
  UtteranceKey source;
  ModelInput input;
  Target target;
  Polarity polarity = Polarity::Neutral;
};

// Named parameter tensors. Linear: W (labels x features), b (labels x 1).
// Attention: E (vocab x d), Wq, Wk, Wv (d x d), Wo (labels x d), bo (labels x 1).
struct ModelParams {
  Head head = Head::Linear;
  std::vector<std::string> names;
  std::vector<Eigen::MatrixXd> tensors;

  static ModelParams zeros_linear(std::size_t labels, std::size_t features);
  static ModelParams zeros_attention(std::size_t labels, std::size_t vocab, std::size_t dim);

  std::size_t label_count() const;
  std::size_t input_width() const;  // features (linear) or vocabulary size (attention)
  std::size_t parameter_count() const;
  bool all_finite() const;

  // Same names and shapes, all zero.
  ModelParams zeros_like() const;

  std::vector<double> flatten() const;
  void unflatten(std::span<const double> values);

  Json to_json() const;
  static ModelParams from_json(const Json& j);
  bool operator==(const ModelParams&) const = default;
};

class Rng;

// Every parameter uniform in [-scale, scale].
void initialize(ModelParams& params, Rng& rng, double scale);

// Max-subtracted. Throws std::invalid_argument on an empty vector.
Eigen::VectorXd softmax(const Eigen::VectorXd& x);
Eigen::VectorXd logistic(const Eigen::VectorXd& x);

struct ForwardResult {
  Eigen::VectorXd logits;
  Eigen::VectorXd probabilities;
};

// Throws std::invalid_argument when the input does not fit the parameters.
ForwardResult forward(const ModelParams& params, const ModelInput& input, bool multi_label);

// Single mode: -ln p(class). Multi-label: mean binary cross-entropy over
// labels. Both computed from logits in a numerically stable form.
double loss_from_logits(const Eigen::VectorXd& logits, const Target& target, bool multi_label);

struct GradientResult {
  double loss = 0;  // mean over the batch
  ModelParams grads;
};

// Analytic gradients of the mean batch loss. Throws std::invalid_argument on
// an empty batch.
GradientResult gradients(const ModelParams& params, std::span<const Example* const> batch, bool multi_label);

struct AdamState {
  std::vector<Eigen::MatrixXd> m;
  std::vector<Eigen::MatrixXd> v;
  std::uint64_t step = 0;

  static AdamState for_params(const ModelParams& params);
};

struct AdamHyper {
  double learning_rate = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;

  static AdamHyper from(const TrainConfig& config);
};

// Decoupled weight decay followed by the bias-corrected Adam update.
void adamw_step(ModelParams& params, const ModelParams& grads, AdamState& state, const AdamHyper& hyper);

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;
  double validation_loss = 0;
  double validation_accuracy = 0;
  double elapsed_seconds = 0;
  bool validation_empty = false;
};

Json to_json(const EpochStats& s, bool include_elapsed = true);
EpochStats epoch_stats_from_json(const Json& j);

struct ModelSpec {
  LabelSpace labels;
  FeatureLayout layout;
  std::size_t vocab_size = 0;
  std::string vocab_hash;
};

struct TrainedModel {
  ModelParams params;
  TrainConfig config;
  LabelSpace labels;
  FeatureLayout layout;
  std::string vocab_hash;
  std::vector<EpochStats> history;
  std::set<std::string> train_conversations;
  std::set<std::string> validation_conversations;
  std::string slice;  // polarity name for per-sentiment models, otherwise empty

  bool multi_label() const { return labels.multi_label(); }
};

struct TrainOptions {
  // Permits an empty validation split; its stats are then zero and flagged.
  bool allow_empty_validation = false;
  std::ostream* progress = nullptr;  // receives the epoch table when set
};

// Throws DataError on an empty training split (or empty validation split
// unless allowed) and when a split's conversations overlap the other's.
TrainedModel train(const std::vector<Example>& train_set, const std::vector<Example>& validation_set,
                   const ModelSpec& spec, const TrainConfig& config, const TrainOptions& options = {});

struct IntentPrediction {
  std::vector<double> probabilities;
  std::vector<std::size_t> labels;  // ascending
};

// Multi-label: every label with p >= threshold, plus the argmax. Single: the
// argmax, lowest index on ties.
IntentPrediction decide(const Eigen::VectorXd& probabilities, bool multi_label, double threshold);
IntentPrediction predict(const TrainedModel& model, const ModelInput& input);

std::size_t argmax(const Eigen::VectorXd& x);

struct PerSentimentResult {
  std::map<Polarity, TrainedModel> models;
  std::map<Polarity, std::size_t> train_sizes;
  std::map<Polarity, std::size_t> validation_sizes;
  std::vector<std::string> warnings;
};

// Partitions both splits by example polarity and trains one model per
// polarity with a non-empty training slice.
PerSentimentResult train_per_sentiment(const std::vector<Example>& train_set,
                                       const std::vector<Example>& validation_set, const ModelSpec& spec,
                                       const TrainConfig& config, const TrainOptions& options = {});

// Checkpoint format "intentpipe-model", version 1. Elapsed times are left out
// so the file is a pure function of data, config and seed.
inline constexpr std::string_view kCheckpointFormat = "intentpipe-model";
inline constexpr int kCheckpointVersion = 1;

Json checkpoint_json(const TrainedModel& model);
TrainedModel model_from_checkpoint(const Json& j);
void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path);
// Throws ConfigError("no model: ...") when the file is missing.
TrainedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace intentpipe
