#include "intentpipe/pipeline.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <ostream>

#include "intentpipe/contextualize.h"
#include "intentpipe/corpus.h"
#include "intentpipe/curation.h"
#include "intentpipe/error.h"
#include "intentpipe/eval.h"
#include "intentpipe/features.h"
#include "intentpipe/rng.h"
#include "intentpipe/taxonomy.h"
#include "intentpipe/text_tables.h"

namespace intentpipe {

void SplitSpec::validate() const {
  if (!test_count && !(test_fraction > 0 && test_fraction < 1)) {
    throw ConfigError("split: test_fraction must lie in (0,1)");
  }
  if (test_count && *test_count == 0) throw ConfigError("split: test_count must be >= 1");
  if (!(validation_fraction > 0 && validation_fraction < 1)) {
    throw ConfigError("split: validation_fraction must lie in (0,1)");
  }
}

SplitSpec SplitSpec::from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("split config must be a JSON object");
  SplitSpec s;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "test_count") {
        s.test_count = value.is_null() ? std::nullopt : std::optional<std::size_t>(value.get<std::size_t>());
      } else if (key == "test_fraction") {
        s.test_fraction = value.get<double>();
      } else if (key == "validation_fraction") {
        s.validation_fraction = value.get<double>();
      } else if (key == "seed") {
        s.seed = value.get<std::uint64_t>();
      } else {
        throw ConfigError("split config: unknown key '" + key + "'");
      }
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("split config: ") + e.what());
  }
  s.validate();
  return s;
}

Json SplitSpec::to_json() const {
  return Json{{"test_count", test_count ? Json(*test_count) : Json(nullptr)},
              {"test_fraction", test_fraction},
              {"validation_fraction", validation_fraction},
              {"seed", seed}};
}

DataSplit DataSplit::make(std::vector<std::string> ids, const SplitSpec& spec) {
  spec.validate();
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  const std::size_t n = ids.size();
  const std::size_t test_n =
      spec.test_count ? *spec.test_count : static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(n)));
  if (test_n == 0 || test_n + 2 > n) {
    throw ConfigError("split: " + std::to_string(n) + " conversations cannot hold " + std::to_string(test_n) +
                      " test conversations plus non-empty training and validation sets");
  }
  const std::size_t rest = n - test_n;
  std::size_t val_n = static_cast<std::size_t>(std::llround(spec.validation_fraction * static_cast<double>(rest)));
  val_n = std::clamp<std::size_t>(val_n, 1, rest - 1);

  Rng rng(spec.seed);
  rng.shuffle(std::span<std::string>(ids));
  DataSplit s;
  s.spec = spec;
  s.test.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(test_n));
  s.validation.assign(ids.begin() + static_cast<std::ptrdiff_t>(test_n),
                      ids.begin() + static_cast<std::ptrdiff_t>(test_n + val_n));
  s.train.assign(ids.begin() + static_cast<std::ptrdiff_t>(test_n + val_n), ids.end());
  for (auto* v : {&s.train, &s.validation, &s.test}) std::sort(v->begin(), v->end());
  return s;
}

Json DataSplit::to_json() const {
  return Json{{"spec", spec.to_json()}, {"train", train}, {"validation", validation}, {"test", test}};
}

DataSplit DataSplit::from_json(const Json& j) {
  DataSplit s;
  try {
    s.spec = SplitSpec::from_json(j.at("spec"));
    s.train = j.at("train").get<std::vector<std::string>>();
    s.validation = j.at("validation").get<std::vector<std::string>>();
    s.test = j.at("test").get<std::vector<std::string>>();
  } catch (const Json::exception& e) {
    throw DataError(std::string("split artifact: ") + e.what());
  }
  return s;
}

RunConfig RunConfig::from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  RunConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "split") c.split = SplitSpec::from_json(value);
    else if (key == "train") c.train = TrainConfig::from_json(value);
    else throw ConfigError("run config: unknown key '" + key + "'");
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

Json RunConfig::to_json() const { return Json{{"split", split.to_json()}, {"train", train.to_json()}}; }

std::optional<std::uint64_t> seed_override() {
  const char* v = std::getenv("PIPELINE_SEED");
  if (!v || !*v) return std::nullopt;
  const std::string s(v);
  if (!std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }) || s.size() > 19) {
    throw ConfigError("PIPELINE_SEED must be an unsigned integer, got '" + s + "'");
  }
  return std::stoull(s);
}

RunConfig with_seed_override(RunConfig config) {
  if (auto seed = seed_override()) {
    config.split.seed = *seed;
    config.train.seed = *seed;
  }
  return config;
}

namespace {

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json read_artifact(const fs::path& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw DataError("artifact " + path.string() + " is not valid JSON: " + e.what());
  }
}

void require_file(const fs::path& path, const std::string& hint) {
  if (!fs::is_regular_file(path)) throw ConfigError("missing " + path.string() + (hint.empty() ? "" : "; " + hint));
}

void require_dir(const fs::path& path, const std::string& what) {
  if (!fs::is_directory(path)) throw ConfigError(what + " directory not found: " + path.string());
}

class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    const fs::path path = dir_ / name;
    fs::create_directories(path.parent_path());
    write_file_atomic(path, content);
    hashes_[name] = sha256_hex(content);
  }
  void write_json(const std::string& name, const Json& j) { write(name, dump_json(j)); }

  const std::map<std::string, std::string>& hashes() const { return hashes_; }

 private:
  fs::path dir_;
  std::map<std::string, std::string> hashes_;
};

struct Stage {
  std::string name;
  fs::path in;
  fs::path out;
  std::vector<std::pair<std::string, fs::path>> inputs;  // label -> file read by the stage
  Json config = Json::object();
  std::vector<std::string> forwarded;  // artifact names copied from `in` to `out`
};

std::string hash_inputs(const Stage& stage) {
  std::string buf = stage.name + "\n";
  for (const auto& [label, path] : stage.inputs) buf += label + "\t" + sha256_hex(read_file(path)) + "\n";
  return sha256_hex(buf);
}

void append_run_log(const fs::path& dir, const std::string& stage, const std::string& config_hash,
                    const std::string& status, const Json& summary) {
  fs::create_directories(dir);
  std::ofstream log(dir / artifact::kRunLog, std::ios::app);
  log << iso_now() << "\t" << stage << "\tconfig=" << config_hash.substr(0, 12) << "\tstatus=" << status << "\t"
      << summary.dump() << "\n";
}

void forward(const Stage& stage) {
  if (stage.in.empty() || fs::equivalent(stage.in, stage.out)) return;
  for (const auto& name : stage.forwarded) {
    const fs::path src = stage.in / name;
    if (!fs::exists(src)) continue;
    const fs::path dst = stage.out / name;
    fs::create_directories(dst.parent_path());
    write_file_atomic(dst, read_file(src));
  }
}

StageOutcome run_stage(Stage stage, const StageOptions& options, const std::function<Json(Outputs&)>& body) {
  for (const auto& [label, path] : stage.inputs) require_file(path, "");
  fs::create_directories(stage.out);
  const std::string input_hash = hash_inputs(stage);
  const std::string config_hash = sha256_hex(dump_json(stage.config));

  const fs::path manifest_path = stage.out / artifact::kManifest;
  Json manifest = fs::exists(manifest_path) ? read_artifact(manifest_path) : Json{{"stages", Json::object()}};
  if (!manifest.contains("stages")) manifest["stages"] = Json::object();

  if (!options.from_scratch && manifest["stages"].contains(stage.name)) {
    const Json& entry = manifest["stages"][stage.name];
    bool fresh = entry.value("input_hash", "") == input_hash && entry.value("config_hash", "") == config_hash;
    if (fresh) {
      for (const auto& [name, hash] : entry.at("outputs").items()) {
        const fs::path p = stage.out / name;
        if (!fs::exists(p) || sha256_hex(read_file(p)) != hash.get<std::string>()) {
          fresh = false;
          break;
        }
      }
    }
    if (fresh) {
      forward(stage);
      StageOutcome o{true, entry.value("summary", Json::object())};
      append_run_log(stage.out, stage.name, config_hash, "cached", o.summary);
      if (options.log) *options.log << stage.name << ": up to date, nothing recomputed\n";
      return o;
    }
  }

  Outputs outputs(stage.out);
  StageOutcome o;
  o.summary = body(outputs);
  forward(stage);

  Json inputs = Json::object();
  for (const auto& [label, path] : stage.inputs) inputs[label] = path.string();
  Json hashes = Json::object();
  for (const auto& [name, hash] : outputs.hashes()) hashes[name] = hash;
  // Re-read: the body may have written a different manifest entry when in == out.
  manifest = fs::exists(manifest_path) ? read_artifact(manifest_path) : Json{{"stages", Json::object()}};
  if (!manifest.contains("stages")) manifest["stages"] = Json::object();
  manifest["stages"][stage.name] = Json{{"input_hash", input_hash},
                                        {"config_hash", config_hash},
                                        {"inputs", inputs},
                                        {"outputs", hashes},
                                        {"timestamp", iso_now()},
                                        {"summary", o.summary}};
  write_json_file(manifest_path, manifest);
  append_run_log(stage.out, stage.name, config_hash, "ok", o.summary);
  return o;
}

std::vector<Conversation> load_corpus(const fs::path& dir) {
  const fs::path path = dir / artifact::kCorpus;
  require_file(path, "run the ingest stage first");
  auto result = ingest_corpus(read_file(path), FieldMapConfig::canonical());
  if (result.skipped_count() > 0) throw DataError("corpus artifact " + path.string() + " has invalid records");
  return std::move(result.conversations);
}

std::vector<CleanUtterance> load_clean(const fs::path& dir) {
  const Json j = read_artifact(dir / artifact::kClean);
  std::vector<CleanUtterance> out;
  for (const auto& u : j.at("utterances")) out.push_back(clean_utterance_from_json(u));
  return out;
}

std::vector<FeatureBundle> load_features(const fs::path& dir) {
  const Json j = read_artifact(dir / artifact::kFeatures);
  std::vector<FeatureBundle> out;
  for (const auto& b : j.at("bundles")) out.push_back(feature_bundle_from_json(b));
  return out;
}

std::vector<ContextualizedRecord> load_records(const fs::path& dir) {
  const Json j = read_artifact(dir / artifact::kRecords);
  std::vector<ContextualizedRecord> out;
  for (const auto& r : j.at("records")) out.push_back(contextualized_record_from_json(r));
  return out;
}

Vocabulary load_vocab(const fs::path& dir) { return Vocabulary::from_json(read_artifact(dir / artifact::kVocab)); }

struct FeatureSpace {
  std::vector<std::string> entity_types;
  std::vector<std::string> keywords;
};

FeatureSpace load_feature_space(const fs::path& dir) {
  const Json j = read_artifact(dir / artifact::kFeatureSpace);
  return {j.at("entity_types").get<std::vector<std::string>>(), j.at("keywords").get<std::vector<std::string>>()};
}

std::string hint_for(const std::string& stage) { return "run the " + stage + " stage first"; }

// Example construction shared by train and evaluate.
struct ExampleSource {
  std::vector<ContextualizedRecord> records;
  std::map<UtteranceKey, FeatureBundle> bundles;
  Vocabulary vocab;
  DataSplit split;
};

ExampleSource load_example_source(const fs::path& dir) {
  ExampleSource s;
  s.records = load_records(dir);
  for (auto& b : load_features(dir)) {
    auto key = b.source;
    s.bundles.emplace(std::move(key), std::move(b));
  }
  s.vocab = load_vocab(dir);
  s.split = DataSplit::from_json(read_artifact(dir / artifact::kSplit));
  return s;
}

std::vector<Example> build_examples(const ExampleSource& src, const std::set<std::string>& conversations,
                                    const LabelSpace& labels, const FeatureLayout& layout, const TrainConfig& config) {
  std::vector<Example> out;
  for (const auto& r : src.records) {
    if (!conversations.count(r.source.conversation_id)) continue;
    auto it = src.bundles.find(r.source);
    if (it == src.bundles.end()) throw DataError("no feature bundle for " + to_string(r.source));
    Example e;
    e.source = r.source;
    e.input = assemble_vector(it->second, r.lemmas, r.context(), layout, src.vocab, config);
    e.target = target_vector(r.labeling, labels);
    e.polarity = r.sentiment.polarity;
    out.push_back(std::move(e));
  }
  return out;
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

std::vector<std::string> tag_vocabulary(const std::vector<ContextualizedRecord>& records) {
  std::set<std::string> tags;
  for (const auto& r : records) tags.insert(r.labeling.raw_tags.begin(), r.labeling.raw_tags.end());
  return {tags.begin(), tags.end()};
}

Json history_json(const std::vector<EpochStats>& history) {
  Json h = Json::array();
  for (const auto& s : history) h.push_back(to_json(s));
  return h;
}

Json final_epoch(const TrainedModel& m) { return to_json(m.history.back(), false); }

}  // namespace

StageOutcome run_ingest(const fs::path& corpus, const fs::path& field_map, const fs::path& out,
                        const StageOptions& options) {
  require_file(corpus, "corpus file not found");
  FieldMapConfig fm = field_map.empty() ? FieldMapConfig::msdialog() : FieldMapConfig::load(field_map);
  Stage stage{"ingest", {}, out, {{"corpus", corpus}}, Json{{"field_map", fm.to_json()}}, {}};
  return run_stage(stage, options, [&](Outputs& o) {
    const auto result = ingest_corpus(read_file(corpus), fm);
    if (result.conversations.empty()) throw DataError("no conversation in " + corpus.string() + " could be ingested");
    o.write_json(artifact::kCorpus, serialize_corpus(result.conversations, FieldMapConfig::canonical()));
    Json diags = Json::array();
    for (const auto& d : result.diagnostics) diags.push_back(to_json(d));
    std::size_t utterances = 0;
    for (const auto& c : result.conversations) utterances += c.utterances.size();
    o.write_json(artifact::kDiagnostics, Json{{"entry_count", result.entry_count},
                                              {"accepted", result.conversations.size()},
                                              {"skipped", result.skipped_count()},
                                              {"diagnostics", diags}});
    if (options.log) {
      *options.log << "ingest: " << result.conversations.size() << " conversations accepted, "
                   << result.skipped_count() << " skipped, " << result.diagnostics.size() << " diagnostics\n";
    }
    return Json{{"conversations", result.conversations.size()},
                {"utterances", utterances},
                {"skipped", result.skipped_count()}};
  });
}

StageOutcome run_stats(const fs::path& in, const StageOptions& options) {
  require_dir(in, "input");
  require_file(in / artifact::kCorpus, hint_for("ingest"));
  Stage stage{"stats", in, in, {{"corpus", in / artifact::kCorpus}}, Json::object(), {}};
  return run_stage(stage, options, [&](Outputs& o) {
    const Json stats = to_json(corpus_stats(load_corpus(in)));
    o.write_json(artifact::kStats, stats);
    return stats;
  });
}

StageOutcome run_curate(const fs::path& in, const fs::path& config, const fs::path& out,
                        const StageOptions& options) {
  require_dir(in, "input");
  require_file(in / artifact::kCorpus, hint_for("ingest"));
  require_file(config, "curation config not found");
  const CurationConfig cfg = CurationConfig::load(config);
  Stage stage{"curate", in, out, {{"corpus", in / artifact::kCorpus}}, Json{{"curation", cfg.to_json()}},
              {artifact::kCorpus}};
  return run_stage(stage, options, [&](Outputs& o) {
    const auto corpus = load_corpus(in);
    Json utts = Json::array();
    std::size_t tokens = 0, removed = 0;
    for (const auto& c : corpus) {
      for (const auto& u : c.utterances) {
        const auto clean = curate_utterance(c.conversation_id, u, cfg);
        tokens += clean.tokens.size();
        removed += clean.removed_stopwords.size();
        utts.push_back(to_json(clean));
      }
    }
    o.write_json(artifact::kClean, Json{{"utterances", utts}});
    return Json{{"utterances", utts.size()}, {"kept_tokens", tokens}, {"removed_stopwords", removed}};
  });
}

StageOutcome run_featurize(const fs::path& in, const fs::path& lexicons, const fs::path& out,
                           const fs::path& config, const StageOptions& options) {
  require_dir(in, "input");
  require_file(in / artifact::kCorpus, hint_for("ingest"));
  require_file(in / artifact::kClean, hint_for("curate"));
  require_dir(lexicons, "lexicon");
  const Lexicons lex = Lexicons::load(lexicons);
  RunConfig rc = with_seed_override(config.empty() ? RunConfig{} : RunConfig::load(config));

  Stage stage{"featurize", in, out,
              {{"corpus", in / artifact::kCorpus}, {"clean", in / artifact::kClean}},
              Json{{"lexicons", lex.to_json()}, {"split", rc.split.to_json()}},
              {artifact::kCorpus, artifact::kClean}};
  return run_stage(stage, options, [&](Outputs& o) {
    const auto corpus = load_corpus(in);
    const auto clean = load_clean(in);
    std::vector<std::string> ids;
    for (const auto& c : corpus) ids.push_back(c.conversation_id);
    const DataSplit split = DataSplit::make(ids, rc.split);
    const auto train_ids = as_set(split.train);

    std::vector<std::vector<std::string>> docs;
    for (const auto& c : clean) {
      if (train_ids.count(c.source.conversation_id)) docs.push_back(c.kept_lemmas());
    }
    const Vocabulary vocab = Vocabulary::fit(docs);

    Json bundles = Json::array();
    for (const auto& c : clean) bundles.push_back(to_json(extract_features(c, vocab, lex)));

    o.write_json(artifact::kSplit, split.to_json());
    o.write_json(artifact::kVocab, vocab.to_json());
    o.write_json(artifact::kFeatureSpace, Json{{"entity_types", lex.entity_types()}, {"keywords", lex.keywords}});
    o.write_json(artifact::kFeatures, Json{{"vocab_hash", vocab.hash()}, {"bundles", bundles}});
    if (options.log) {
      *options.log << "featurize: vocabulary " << vocab.size() << " terms; split " << split.train.size() << "/"
                   << split.validation.size() << "/" << split.test.size() << " conversations\n";
    }
    return Json{{"vocabulary", vocab.size()},
                {"bundles", bundles.size()},
                {"train_conversations", split.train.size()},
                {"validation_conversations", split.validation.size()},
                {"test_conversations", split.test.size()}};
  });
}

StageOutcome run_contextualize(const fs::path& in, const fs::path& map_path, const fs::path& out,
                               const StageOptions& options) {
  require_dir(in, "input");
  for (const char* name : {artifact::kCorpus, artifact::kClean, artifact::kFeatures}) {
    require_file(in / name, hint_for(name == artifact::kFeatures ? "featurize" : "curate"));
  }
  require_file(map_path, "consolidation map not found");
  const ConsolidationMap map = ConsolidationMap::load(map_path);

  Stage stage{"contextualize", in, out,
              {{"corpus", in / artifact::kCorpus}, {"clean", in / artifact::kClean}, {"features", in / artifact::kFeatures}},
              Json{{"map", map.to_json()}},
              {artifact::kCorpus, artifact::kClean, artifact::kFeatures, artifact::kSplit, artifact::kVocab,
               artifact::kFeatureSpace}};
  return run_stage(stage, options, [&](Outputs& o) {
    const auto corpus = load_corpus(in);
    const auto warnings = map.check_against(corpus_stats(corpus));
    if (options.log) {
      for (const auto& w : warnings) *options.log << "warning: " << w << "\n";
    }
    std::vector<IntentLabeling> labelings;
    for (const auto& c : corpus) {
      for (const auto& u : c.utterances) labelings.push_back(label_utterance({c.conversation_id, u.utterance_id}, u.raw_tags, map));
    }
    const auto records = contextualize(corpus, load_clean(in), load_features(in), labelings);
    const auto dist = label_distribution(labelings);

    Json lj = Json::array();
    for (const auto& l : labelings) lj.push_back(to_json(l));
    Json rj = Json::array();
    for (const auto& r : records) rj.push_back(to_json(r));
    o.write_json(artifact::kMap, map.to_json());
    o.write_json(artifact::kLabels, Json{{"map_version", map.version}, {"labelings", lj}});
    o.write_json(artifact::kRecords, Json{{"records", rj}});
    o.write_json(artifact::kDistribution, to_json(dist));
    o.write(artifact::kDistributionCsv, to_csv(dist));
    return Json{{"records", records.size()}, {"tags", dist.tags.size()}, {"warnings", warnings}};
  });
}

StageOutcome run_train(const fs::path& in, const fs::path& config, const fs::path& out,
                       const TrainOverrides& overrides, const StageOptions& options) {
  require_dir(in, "input");
  for (const char* name : {artifact::kRecords, artifact::kFeatures, artifact::kVocab, artifact::kSplit,
                           artifact::kFeatureSpace}) {
    require_file(in / name, hint_for(name == artifact::kRecords ? "contextualize" : "featurize"));
  }
  require_file(config, "train config not found");
  RunConfig rc = with_seed_override(RunConfig::load(config));
  if (overrides.head) rc.train.head = *overrides.head;
  if (overrides.label_mode) rc.train.label_mode = *overrides.label_mode;
  rc.train.validate();

  const DataSplit split = DataSplit::from_json(read_artifact(in / artifact::kSplit));
  if (!(split.spec == rc.split)) {
    throw ConfigError("the split in " + config.string() + " differs from the one featurize used (" +
                      split.spec.to_json().dump() + "); rerun featurize with this config");
  }

  Stage stage{"train", in, out,
              {{"records", in / artifact::kRecords},
               {"features", in / artifact::kFeatures},
               {"vocab", in / artifact::kVocab},
               {"split", in / artifact::kSplit},
               {"feature_space", in / artifact::kFeatureSpace}},
              Json{{"run", rc.to_json()}, {"per_sentiment", overrides.per_sentiment}},
              {artifact::kCorpus, artifact::kClean, artifact::kFeatures, artifact::kSplit, artifact::kVocab,
               artifact::kFeatureSpace, artifact::kMap, artifact::kLabels, artifact::kRecords, artifact::kDistribution,
               artifact::kDistributionCsv}};
  return run_stage(stage, options, [&](Outputs& o) {
    const ExampleSource src = load_example_source(in);
    const FeatureSpace space = load_feature_space(in);
    ModelSpec spec;
    spec.labels = LabelSpace::make(rc.train.label_mode, tag_vocabulary(src.records));
    spec.layout = FeatureLayout::make(src.vocab.size(), space.entity_types, space.keywords, rc.train);
    spec.vocab_size = src.vocab.size();
    spec.vocab_hash = src.vocab.hash();
    const auto train_set = build_examples(src, as_set(split.train), spec.labels, spec.layout, rc.train);
    const auto validation_set = build_examples(src, as_set(split.validation), spec.labels, spec.layout, rc.train);

    TrainOptions topts;
    topts.progress = options.log;
    const TrainedModel model = train(train_set, validation_set, spec, rc.train, topts);
    const Json checkpoint = checkpoint_json(model);
    o.write_json(artifact::kModel, checkpoint);
    o.write_json(artifact::kHistory, Json{{"history", history_json(model.history)}});

    Json summary{{"checkpoint_sha256", sha256_hex(dump_json(checkpoint))},
                 {"train_examples", train_set.size()},
                 {"validation_examples", validation_set.size()},
                 {"final_epoch", final_epoch(model)}};

    if (overrides.per_sentiment) {
      const auto per = train_per_sentiment(train_set, validation_set, spec, rc.train, topts);
      Json slices = Json::object();
      for (const auto& [polarity, m] : per.models) {
        const std::string name(to_string(polarity));
        o.write_json("models/model_" + name + ".json", checkpoint_json(m));
        slices[name] = Json{{"train_examples", per.train_sizes.at(polarity)},
                            {"validation_examples", per.validation_sizes.at(polarity)},
                            {"history", history_json(m.history)}};
      }
      if (options.log) {
        for (const auto& w : per.warnings) *options.log << "warning: " << w << "\n";
      }
      o.write_json("per_sentiment.json", Json{{"slices", slices}, {"warnings", per.warnings}});
      summary["per_sentiment_slices"] = per.models.size();
    }
    return summary;
  });
}

StageOutcome run_evaluate(const fs::path& model_path, const fs::path& in, const fs::path& out,
                          const StageOptions& options) {
  if (!fs::is_regular_file(model_path)) throw ConfigError("no model: " + model_path.string() + " does not exist");
  require_dir(in, "input");
  for (const char* name : {artifact::kRecords, artifact::kFeatures, artifact::kVocab, artifact::kSplit}) {
    require_file(in / name, hint_for(name == artifact::kRecords ? "contextualize" : "featurize"));
  }
  std::vector<std::pair<std::string, fs::path>> inputs = {{"model", model_path},
                                                          {"records", in / artifact::kRecords},
                                                          {"features", in / artifact::kFeatures},
                                                          {"vocab", in / artifact::kVocab},
                                                          {"split", in / artifact::kSplit}};
  const bool has_map = fs::exists(in / artifact::kMap);
  if (has_map) inputs.emplace_back("map", in / artifact::kMap);

  Stage stage{"evaluate", in, out, inputs, Json::object(),
              {artifact::kCorpus, artifact::kClean, artifact::kFeatures, artifact::kSplit, artifact::kVocab,
               artifact::kFeatureSpace, artifact::kMap, artifact::kLabels, artifact::kRecords, artifact::kDistribution,
               artifact::kDistributionCsv, artifact::kHistory}};
  return run_stage(stage, options, [&](Outputs& o) {
    const std::string model_text = read_file(model_path);
    const TrainedModel model = load_checkpoint(model_path);
    const ExampleSource src = load_example_source(in);
    if (src.vocab.hash() != model.vocab_hash) {
      throw ConfigError("the model was trained on a different vocabulary than " + (in / artifact::kVocab).string());
    }
    const auto test_set = build_examples(src, as_set(src.split.test), model.labels, model.layout, model.config);
    if (test_set.empty()) throw DataError("the test split is empty");
    const MetricsReport report = evaluate(model, test_set);

    Json feedback;
    if (has_map) {
      const ConsolidationMap map = ConsolidationMap::from_json(read_artifact(in / artifact::kMap));
      std::vector<IntentLabeling> labelings;
      std::vector<SentimentResult> sentiments;
      const auto test_ids = as_set(src.split.test);
      for (const auto& r : src.records) {
        if (!test_ids.count(r.source.conversation_id)) continue;
        labelings.push_back(r.labeling);
        sentiments.push_back(r.sentiment);
      }
      try {
        feedback = to_json(feedback_sentiment_check(labelings, sentiments, map));
      } catch (const DataError& e) {
        feedback = Json{{"skipped", e.what()}};
      }
    } else {
      feedback = Json{{"skipped", "no consolidation map artifact"}};
    }

    const std::string model_sha = sha256_hex(model_text);
    o.write_json(artifact::kMetrics, Json{{"model_sha256", model_sha},
                                          {"head", std::string(to_string(model.config.head))},
                                          {"label_mode", std::string(to_string(model.labels.mode))},
                                          {"test_conversations", src.split.test.size()},
                                          {"report", to_json(report)},
                                          {"feedback_sentiment", feedback}});
    o.write(artifact::kMetricsCsv, metrics_csv(report));
    if (!fs::exists(out / artifact::kModel) || !fs::equivalent(model_path, out / artifact::kModel)) {
      o.write(artifact::kModel, model_text);
    }
    if (options.log) *options.log << metrics_table(report);
    return Json{{"examples", report.example_count},
                {"exact_set_accuracy", report.exact_set_accuracy},
                {"argmax_accuracy", report.argmax_accuracy},
                {"micro_f1", report.micro.f1.value},
                {"macro_f1", report.macro.f1.value},
                {"macro_auc", report.macro_auc ? Json(*report.macro_auc) : Json(nullptr)}};
  });
}

StageOutcome run_report(const fs::path& in, const fs::path& out, const StageOptions& options) {
  require_dir(in, "input");
  for (const char* name : {artifact::kRecords, artifact::kFeatures, artifact::kVocab}) {
    require_file(in / name, hint_for(name == artifact::kRecords ? "contextualize" : "featurize"));
  }
  std::vector<std::pair<std::string, fs::path>> inputs = {{"records", in / artifact::kRecords},
                                                          {"features", in / artifact::kFeatures},
                                                          {"vocab", in / artifact::kVocab}};
  const bool has_model = fs::exists(in / artifact::kModel);
  if (has_model) inputs.emplace_back("model", in / artifact::kModel);

  Stage stage{"report", in, out, inputs, Json::object(),
              {artifact::kDistribution, artifact::kDistributionCsv, artifact::kMetrics, artifact::kMetricsCsv,
               artifact::kHistory}};
  return run_stage(stage, options, [&](Outputs& o) {
    const auto records = load_records(in);
    std::map<UtteranceKey, FeatureBundle> bundles;
    for (auto& b : load_features(in)) {
      auto key = b.source;
      bundles.emplace(std::move(key), std::move(b));
    }
    o.write("records.csv", records_csv(records));

    // Word frequency and sentiment per consolidated category.
    std::map<Category, std::map<std::string, std::size_t>> words;
    std::map<Category, std::array<std::size_t, 3>> moods;
    for (const auto& r : records) {
      const auto& b = bundles.at(r.source);
      for (Category c : r.labeling.categories) {
        for (const auto& [w, n] : b.word_freq) words[c][w] += n;
        ++moods[c][static_cast<std::size_t>(r.sentiment.polarity)];
      }
    }
    std::string wf = "category,rank,word,count\n";
    for (const auto& [cat, counts] : words) {
      std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
      std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
      for (std::size_t i = 0; i < std::min<std::size_t>(20, ranked.size()); ++i) {
        wf += std::string(to_string(cat)) + "," + std::to_string(i + 1) + "," + ranked[i].first + "," +
              std::to_string(ranked[i].second) + "\n";
      }
    }
    o.write("word_frequency.csv", wf);
    std::string sc = "category,positive,negative,neutral,total\n";
    for (Category c : kAllCategories) {
      const auto m = moods.count(c) ? moods.at(c) : std::array<std::size_t, 3>{};
      sc += std::string(to_string(c)) + "," + std::to_string(m[0]) + "," + std::to_string(m[1]) + "," +
            std::to_string(m[2]) + "," + std::to_string(m[0] + m[1] + m[2]) + "\n";
    }
    o.write("sentiment_by_category.csv", sc);

    Json summary{{"records", records.size()}};
    if (has_model) {
      const std::string text = read_file(in / artifact::kModel);
      const TrainedModel model = model_from_checkpoint(read_artifact(in / artifact::kModel));
      if (model.params.head == Head::Linear) {
        const Vocabulary vocab = load_vocab(in);
        const auto report = reverse_feature_report(model, model.layout.feature_names(vocab),
                                                   sha256_hex(text).substr(0, 12), iso_now(), 50);
        o.write_json("attribution.json", to_json(report));
        o.write("attribution.txt", attribution_text(report));
        summary["attribution"] = true;
      } else {
        summary["attribution"] = false;
        summary["attribution_skipped"] = "attention head";
        if (options.log) *options.log << "report: attribution needs a linear-head model; skipped\n";
      }
    }
    return summary;
  });
}

}  // namespace intentpipe
