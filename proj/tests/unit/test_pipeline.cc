#include <cstdlib>

#include <gtest/gtest.h>

#include "intentpipe/error.h"
#include "intentpipe/pipeline.h"
#include "intentpipe/synthetic.h"
#include "test_support.h"

namespace ip = intentpipe;
namespace fs = std::filesystem;
using ip::testing::data_dir;
using ip::testing::TempDir;

namespace {

struct Run {
  fs::path ingest, curate, featurize, contextualize, train, evaluate, report;
};

Run run_all(const fs::path& root, const fs::path& corpus, const ip::StageOptions& options = {}) {
  const auto d = data_dir();
  const auto cfg = d / "config" / "synthetic_run.json";
  Run r{root / "ingest", root / "curate", root / "featurize", root / "context", root / "train", root / "eval",
        root / "report"};
  ip::run_ingest(corpus, d / "corpus" / "msdialog_field_map.json", r.ingest, options);
  ip::run_curate(r.ingest, d / "curation" / "curation.json", r.curate, options);
  ip::run_featurize(r.curate, d / "lexicons", r.featurize, cfg, options);
  ip::run_contextualize(r.featurize, d / "taxonomy" / "consolidation_map.json", r.contextualize, options);
  ip::run_train(r.contextualize, cfg, r.train, {}, options);
  ip::run_evaluate(r.train / "model.json", r.train, r.evaluate, options);
  ip::run_report(r.evaluate, r.report, options);
  return r;
}

fs::path small_corpus(const TempDir& dir) {
  ip::SyntheticSpec spec;
  spec.conversations = 20;
  const auto path = dir / "corpus.json";
  ip::write_json_file(path, ip::synthetic_corpus(spec));
  return path;
}

}  // namespace

TEST(Split, SizesAndDisjointness) {
  std::vector<std::string> ids;
  for (int i = 0; i < 100; ++i) ids.push_back("c" + std::to_string(i));
  ip::SplitSpec spec;
  spec.test_count.reset();
  spec.test_fraction = 0.15;
  spec.validation_fraction = 15.0 / 85.0;
  const auto s = ip::DataSplit::make(ids, spec);
  EXPECT_EQ(s.train.size(), 70u);
  EXPECT_EQ(s.validation.size(), 15u);
  EXPECT_EQ(s.test.size(), 15u);
  std::set<std::string> all(s.train.begin(), s.train.end());
  all.insert(s.validation.begin(), s.validation.end());
  all.insert(s.test.begin(), s.test.end());
  EXPECT_EQ(all.size(), 100u);

  auto shuffled = ids;
  std::reverse(shuffled.begin(), shuffled.end());
  EXPECT_EQ(ip::DataSplit::make(shuffled, spec).test, s.test);
  const auto back = ip::DataSplit::from_json(s.to_json());
  EXPECT_EQ(back.train, s.train);
}

TEST(Split, DefaultHoldsOutThousandConversations) {
  std::vector<std::string> ids;
  for (int i = 0; i < 2199; ++i) ids.push_back("d" + std::to_string(i));
  const auto s = ip::DataSplit::make(ids, ip::SplitSpec{});
  EXPECT_EQ(s.test.size(), 1000u);
  EXPECT_EQ(s.validation.size(), 120u);  // round(0.1 * 1199)
  EXPECT_EQ(s.train.size(), 1079u);
  EXPECT_THROW(ip::DataSplit::make({"a", "b"}, ip::SplitSpec{}), ip::ConfigError);
}

TEST(RunConfig, SeedOverride) {
  ::setenv("PIPELINE_SEED", "99", 1);
  const auto c = ip::with_seed_override(ip::RunConfig{});
  EXPECT_EQ(c.split.seed, 99u);
  EXPECT_EQ(c.train.seed, 99u);
  ::setenv("PIPELINE_SEED", "abc", 1);
  EXPECT_THROW(ip::seed_override(), ip::ConfigError);
  ::unsetenv("PIPELINE_SEED");
  EXPECT_FALSE(ip::seed_override());
}

TEST(RunConfig, ShippedConfigsParse) {
  const auto syn = ip::RunConfig::load(data_dir() / "config" / "synthetic_run.json");
  EXPECT_FALSE(syn.split.test_count);
  EXPECT_EQ(syn.train.batch_size, 16u);
  EXPECT_DOUBLE_EQ(syn.train.learning_rate, 5e-5);
  const auto ms = ip::RunConfig::load(data_dir() / "config" / "msdialog_run.json");
  EXPECT_EQ(ms.split.test_count, 1000u);
  EXPECT_THROW(ip::RunConfig::from_json({{"bogus", 1}}), ip::ConfigError);
}

TEST(Pipeline, EndToEndArtifactsAndDeterminism) {
  TempDir a("pipe-a"), b("pipe-b");
  const auto corpus = small_corpus(a);
  const auto ra = run_all(a.path(), corpus);
  const auto rb = run_all(b.path(), corpus);
  for (const char* name : {"metrics.json", "metrics.csv", "model.json"}) {
    EXPECT_EQ(ip::read_file(ra.evaluate / name), ip::read_file(rb.evaluate / name)) << name;
  }
  for (const char* name : {"records.csv", "word_frequency.csv", "sentiment_by_category.csv", "attribution.txt",
                           "distribution.csv", "run.log", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(ra.report / name)) << name;
  }
  const auto metrics = ip::read_json_file(ra.evaluate / "metrics.json");
  EXPECT_EQ(metrics.at("model_sha256").get<std::string>(), ip::sha256_hex(ip::read_file(ra.train / "model.json")));
  const auto report = metrics.at("report");
  for (const auto& row : report.at("labels")) {
    for (const char* m : {"accuracy", "precision", "recall", "f1"}) {
      const double v = row.at(m).get<double>();
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Pipeline, CachedStagesDoNotRecompute) {
  TempDir dir("cache");
  const auto corpus = small_corpus(dir);
  const auto r = run_all(dir.path(), corpus);
  const auto manifest = ip::read_file(r.train / "manifest.json");
  const auto model = ip::read_file(r.train / "model.json");

  const auto d = data_dir();
  const auto again = ip::run_train(r.contextualize, d / "config" / "synthetic_run.json", r.train);
  EXPECT_TRUE(again.cached);
  EXPECT_EQ(ip::read_file(r.train / "manifest.json"), manifest);

  ip::StageOptions scratch;
  scratch.from_scratch = true;
  EXPECT_FALSE(ip::run_train(r.contextualize, d / "config" / "synthetic_run.json", r.train, {}, scratch).cached);
  EXPECT_EQ(ip::read_file(r.train / "model.json"), model);

  // A changed override is a changed config.
  ip::TrainOverrides single;
  single.label_mode = ip::LabelMode::ConsolidatedSingle;
  EXPECT_FALSE(ip::run_train(r.contextualize, d / "config" / "synthetic_run.json", r.train, single).cached);
  EXPECT_NE(ip::read_file(r.train / "model.json"), model);
}

TEST(Pipeline, UpstreamChangeInvalidatesCache) {
  TempDir dir("invalidate");
  const auto corpus = small_corpus(dir);
  const auto d = data_dir();
  const auto out = dir / "ingest";
  EXPECT_FALSE(ip::run_ingest(corpus, d / "corpus" / "msdialog_field_map.json", out).cached);
  EXPECT_TRUE(ip::run_ingest(corpus, d / "corpus" / "msdialog_field_map.json", out).cached);
  ip::SyntheticSpec spec;
  spec.conversations = 21;
  ip::write_json_file(corpus, ip::synthetic_corpus(spec));
  EXPECT_FALSE(ip::run_ingest(corpus, d / "corpus" / "msdialog_field_map.json", out).cached);
}

TEST(Pipeline, PerSentimentAndAttentionHead) {
  TempDir dir("variants");
  const auto corpus = small_corpus(dir);
  const auto r = run_all(dir.path(), corpus);
  ip::TrainOverrides o;
  o.head = ip::Head::Attention;
  o.per_sentiment = true;
  const auto out = dir / "att";
  const auto outcome = ip::run_train(r.contextualize, data_dir() / "config" / "synthetic_run.json", out, o);
  EXPECT_TRUE(fs::exists(out / "per_sentiment.json"));
  EXPECT_TRUE(fs::exists(out / "models"));
  EXPECT_EQ(ip::load_checkpoint(out / "model.json").params.head, ip::Head::Attention);
  ip::run_evaluate(out / "model.json", out, dir / "att_eval");
  const auto rep = ip::run_report(dir / "att_eval", dir / "att_report");
  EXPECT_FALSE(fs::exists(dir / "att_report" / "attribution.json"));
  EXPECT_FALSE(rep.summary.at("attribution").get<bool>());
}

TEST(Pipeline, MissingPrerequisitesAreConfigErrors) {
  TempDir dir("missing");
  const auto d = data_dir();
  EXPECT_THROW(ip::run_curate(dir / "nope", d / "curation" / "curation.json", dir / "out"), ip::ConfigError);
  EXPECT_THROW(ip::run_evaluate(dir / "model.json", dir.path(), dir / "out"), ip::ConfigError);
  EXPECT_THROW(ip::run_ingest(dir / "absent.json", d / "corpus" / "msdialog_field_map.json", dir / "out"),
               ip::ConfigError);
}

TEST(Pipeline, MalformedCorpusIsDataError) {
  TempDir dir("malformed");
  ip::write_file_atomic(dir / "bad.json", "{\"a\": [1, 2,, 3]}");
  EXPECT_THROW(ip::run_ingest(dir / "bad.json", data_dir() / "corpus" / "msdialog_field_map.json", dir / "out"),
               ip::DataError);
}
