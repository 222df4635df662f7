// Acceptance run: one PASS/FAIL/SKIP line per criterion, exit 1 on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "intentpipe/curation.h"
#include "intentpipe/eval.h"
#include "intentpipe/gradcheck.h"
#include "intentpipe/model.h"
#include "intentpipe/pipeline.h"
#include "test_support.h"

namespace ip = intentpipe;
namespace fs = std::filesystem;
using ip::testing::data_dir;
using ip::testing::TempDir;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status = Status::Pass;
  std::string detail;
};

Outcome pass(std::string d) { return {Status::Pass, std::move(d)}; }
Outcome fail(std::string d) { return {Status::Fail, std::move(d)}; }

std::string fmt(double v, int precision = 4) {
  std::ostringstream o;
  o << std::setprecision(precision) << v;
  return o.str();
}

// Runs `body`; a thrown exception or an exceeded budget is a failure.
Outcome timed(double budget_seconds, const std::function<Outcome()>& body, double& elapsed) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = fail(std::string("exception: ") + e.what());
  }
  elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (out.status == Status::Pass && budget_seconds > 0 && elapsed >= budget_seconds) {
    out = fail(out.detail + "; over the " + fmt(budget_seconds) + " s budget");
  }
  return out;
}

// ---- metric formulas --------------------------------------------------------

Outcome metric_oracle() {
  ip::Rng rng(20240601);
  std::size_t labels_checked = 0;
  for (int set = 0; set < 1000; ++set) {
    const std::size_t n = rng.below(501);
    const std::size_t labels = 1 + rng.below(12);
    const double density = rng.uniform(0.05, 0.95);
    ip::LabelRows preds(n, std::vector<std::uint8_t>(labels)), targets(n, std::vector<std::uint8_t>(labels));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t l = 0; l < labels; ++l) {
        preds[i][l] = rng.uniform() < density;
        targets[i][l] = rng.uniform() < density;
      }
    }
    const auto counts = ip::confusion(preds, targets, labels);
    for (std::size_t l = 0; l < labels; ++l) {
      std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const bool p = preds[i][l], t = targets[i][l];
        if (p && t) ++tp;
        else if (p) ++fp;
        else if (t) ++fn;
        else ++tn;
      }
      const auto& c = counts.labels[l];
      if (c.tp != tp || c.fp != fp || c.fn != fn || c.tn != tn) {
        return fail("count mismatch in set " + std::to_string(set) + " label " + std::to_string(l));
      }
      const auto m = ip::metrics(c);
      const double total = static_cast<double>(tp + fp + fn + tn);
      const double acc = total == 0 ? 0.0 : static_cast<double>(tp + tn) / total;
      const double prec = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
      const double rec = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
      const double f1_den = static_cast<double>(tp) + 0.5 * static_cast<double>(fp + fn);
      const double f1 = f1_den == 0 ? 0.0 : static_cast<double>(tp) / f1_den;
      if (std::abs(m.accuracy.value - acc) > 1e-12 || std::abs(m.precision.value - prec) > 1e-12 ||
          std::abs(m.recall.value - rec) > 1e-12 || std::abs(m.f1.value - f1) > 1e-12) {
        return fail("metric mismatch in set " + std::to_string(set) + " label " + std::to_string(l));
      }
      if (m.precision.zero_division != (tp + fp == 0) || m.recall.zero_division != (tp + fn == 0)) {
        return fail("zero-division flag mismatch in set " + std::to_string(set));
      }
      ++labels_checked;
    }
  }
  return pass("1000 sets, " + std::to_string(labels_checked) + " label tables, exact counts, metrics within 1e-12");
}

// ---- AUC ----------------------------------------------------------------------

Outcome auc_oracle() {
  ip::Rng rng(77);
  double worst = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t n = 2 + rng.below(199);
    const bool coarse = inst % 2 == 0;  // coarse scores force many ties
    std::vector<double> scores(n);
    std::vector<std::uint8_t> targets(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = coarse ? static_cast<double>(rng.below(5)) / 4.0 : rng.uniform();
      targets[i] = rng.below(2);
    }
    targets[0] = 0;
    targets[1] = 1;
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!targets[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (targets[j]) continue;
        pairs += 1;
        if (scores[i] > scores[j]) wins += 1;
        else if (scores[i] == scores[j]) wins += 0.5;
      }
    }
    const double err = std::abs(ip::auc_roc(scores, targets) - wins / pairs);
    worst = std::max(worst, err);
    if (err > 1e-9) return fail("instance " + std::to_string(inst) + " differs by " + fmt(err));
  }
  return pass("200 instances, max deviation " + fmt(worst, 3));
}

// ---- softmax ------------------------------------------------------------------

Outcome softmax_suite() {
  const auto p = ip::softmax((Eigen::VectorXd(3) << 1, 2, 3).finished());
  const double expected[] = {0.09003, 0.24473, 0.66524};
  for (int i = 0; i < 3; ++i) {
    if (std::abs(p(i) - expected[i]) > 1e-5) return fail("[1,2,3] component " + std::to_string(i));
  }
  ip::Rng rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(40));
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = rng.uniform(-50, 50);
    const auto s = ip::softmax(x);
    if (std::abs(s.sum() - 1.0) > 1e-9) return fail("sum in trial " + std::to_string(trial));
    const double c = rng.uniform(-500, 500);
    if ((ip::softmax(x.array() + c).matrix() - s).cwiseAbs().maxCoeff() > 1e-9) {
      return fail("shift invariance in trial " + std::to_string(trial));
    }
    if (ip::argmax(s) != ip::argmax(x)) return fail("argmax in trial " + std::to_string(trial));
    if ((s.array() <= 0).any()) return fail("non-positive component");
  }
  return pass("[1,2,3] case plus 2000 random vectors");
}

// ---- gradients ----------------------------------------------------------------

Outcome gradient_check() {
  const auto summary = ip::run_gradcheck(100, 2024);
  std::size_t linear = 0, attention = 0, largest = 0;
  for (const auto& t : summary.trials) {
    (t.head == ip::Head::Linear ? linear : attention) += 1;
    largest = std::max(largest, t.parameters);
  }
  const std::string detail = std::to_string(linear) + " linear + " + std::to_string(attention) +
                             " attention models, at most " + std::to_string(largest) +
                             " parameters, max relative error " + fmt(summary.max_relative_error, 3);
  if (linear < 100 || attention < 100 || largest > 200) return fail(detail);
  if (!summary.passed || summary.max_relative_error >= 1e-4) return fail(detail);
  return pass(detail);
}

// ---- pipeline helpers -----------------------------------------------------------

struct PipelineDirs {
  fs::path work, train, evaluate;
};

PipelineDirs run_pipeline(const fs::path& root, const fs::path& corpus, const fs::path& config, bool report) {
  const auto d = data_dir();
  std::ostringstream sink;
  ip::StageOptions quiet;
  quiet.log = &sink;
  PipelineDirs dirs{root / "work", root / "train", root / "eval"};
  ip::run_ingest(corpus, d / "corpus" / "msdialog_field_map.json", dirs.work, quiet);
  ip::run_curate(dirs.work, d / "curation" / "curation.json", dirs.work, quiet);
  ip::run_featurize(dirs.work, d / "lexicons", dirs.work, config, quiet);
  ip::run_contextualize(dirs.work, d / "taxonomy" / "consolidation_map.json", dirs.work, quiet);
  ip::run_train(dirs.work, config, dirs.train, {}, quiet);
  ip::run_evaluate(dirs.train / "model.json", dirs.train, dirs.evaluate, quiet);
  if (report) ip::run_report(dirs.evaluate, root / "report", quiet);
  return dirs;
}

Outcome desk_training() {
  const auto d = data_dir();
  const auto corpus = d / "corpus" / "synthetic_intents.json";
  const auto config_path = d / "config" / "synthetic_run.json";
  TempDir dir("accept-desk");
  const auto dirs = run_pipeline(dir.path(), corpus, config_path, false);

  const auto stats = ip::corpus_stats(ip::ingest_corpus(ip::read_file(corpus), ip::FieldMapConfig::msdialog()).conversations);
  const auto split = ip::DataSplit::from_json(ip::read_json_file(dirs.work / "split.json"));
  const auto model = ip::load_checkpoint(dirs.train / "model.json");
  const auto& c = model.config;

  std::ostringstream shape;
  shape << stats.utterance_count << " utterances, split " << split.train.size() << "/" << split.validation.size()
        << "/" << split.test.size() << ", " << model.labels.size() << " labels";
  if (stats.utterance_count != 500 || split.train.size() != 70 || split.validation.size() != 15 ||
      split.test.size() != 15 || model.labels.size() != 5 || model.labels.mode != ip::LabelMode::ConsolidatedMultiLabel) {
    return fail("corpus shape: " + shape.str());
  }
  if (c.head != ip::Head::Linear || c.batch_size != 16 || c.learning_rate != 5e-5 || c.lr_scale != 100 ||
      c.adam_epsilon != 1e-8 || c.epochs != 5) {
    return fail("hyperparameters differ from batch 16, lr 5e-5 x100, eps 1e-8, 5 epochs, linear head");
  }
  if (model.history.size() != 5) return fail("history length " + std::to_string(model.history.size()));
  const auto& last = model.history.back();
  const std::string detail = shape.str() + "; final train loss " + fmt(last.train_loss) + ", validation loss " +
                             fmt(last.validation_loss) + ", validation accuracy " + fmt(last.validation_accuracy);
  if (last.validation_accuracy < 0.95 || last.train_loss > 0.2 || last.validation_loss > 0.2) return fail(detail);
  return pass(detail);
}

Outcome determinism() {
  const auto d = data_dir();
  const auto corpus = d / "corpus" / "synthetic_intents.json";
  const auto config = d / "config" / "synthetic_run.json";
  TempDir a("accept-det-a"), b("accept-det-b");
  const auto ra = run_pipeline(a.path(), corpus, config, true);
  const auto rb = run_pipeline(b.path(), corpus, config, true);
  const auto ha = ip::sha256_hex(ip::read_file(ra.train / "model.json"));
  const auto hb = ip::sha256_hex(ip::read_file(rb.train / "model.json"));
  if (ha != hb) return fail("checkpoint hashes differ");
  for (const char* name : {"metrics.json", "metrics.csv"}) {
    if (ip::read_file(ra.evaluate / name) != ip::read_file(rb.evaluate / name)) {
      return fail(std::string(name) + " differs between runs");
    }
  }
  for (const char* name : {"records.csv", "attribution.json", "distribution.csv"}) {
    auto strip = [](std::string s) {
      // attribution.json carries a generation timestamp
      const auto at = s.find("\"generated_at\"");
      if (at != std::string::npos) s.erase(at, s.find('\n', at) - at);
      return s;
    };
    if (strip(ip::read_file(a / "report" / name)) != strip(ip::read_file(b / "report" / name))) {
      return fail(std::string(name) + " differs between runs");
    }
  }
  return pass("two full runs: identical metrics.json bytes, checkpoint sha256 " + ha.substr(0, 16));
}

// ---- taxonomy -------------------------------------------------------------------

Outcome taxonomy_integrity() {
  const auto map = ip::ConsolidationMap::defaults();
  const auto fixture =
      ip::ingest_corpus(ip::read_file(ip::testing::fixture("fixture_corpus.json")), ip::FieldMapConfig::msdialog());
  if (auto m = ip::testing::distribution_mismatch(fixture.conversations, map)) return fail("fixture: " + *m);
  ip::Rng rng(4242);
  std::size_t utterances = 0;
  for (int i = 0; i < 100; ++i) {
    const auto doc = ip::testing::random_tagged_corpus(rng, 1 + rng.below(30));
    const auto corpus = ip::ingest_corpus(doc.dump(), ip::FieldMapConfig::msdialog()).conversations;
    for (const auto& c : corpus) utterances += c.utterances.size();
    if (auto m = ip::testing::distribution_mismatch(corpus, map)) return fail("random corpus " + std::to_string(i) + ": " + *m);
  }
  return pass("fixture plus 100 random corpora (" + std::to_string(utterances) + " utterances) match the recount");
}

// ---- curation -------------------------------------------------------------------

std::string random_text(ip::Rng& rng) {
  static const char* const pieces[] = {
      "a", "b", "e", "s", "z", "Q", "X", "ing", "ies", "sses", "es", "0", "7", "42", " ", " ", "  ", "\t", "\n",
      "'", "'", "-", "-", "--", ".", ",", "!", "?", "/", ":", "`", "`x y`", "http://", "https://a.b/c", "www.",
      "ftp://z", "\xE2\x80\x99", "\xE2\x80\x98", "\xC3\xA9", "\xC3\x89", "\xC3\x9F", "e\xCC\x81", "\xE4\xB8\xAD",
      "\xF0\x9F\x98\x80", "\xC3\xB1", "The", "was", "won't", "sign-in", "books", "I", "HOW", "do"};
  constexpr std::size_t count = sizeof(pieces) / sizeof(pieces[0]);
  std::string s;
  for (std::size_t i = 0, n = rng.below(25); i < n; ++i) s += pieces[rng.below(count)];
  return s;
}

std::string ascii_upper(std::string s) {
  for (auto& ch : s) {
    if (ch >= 'a' && ch <= 'z') ch = static_cast<char>(ch - 'a' + 'A');
  }
  return s;
}

Outcome curation_properties() {
  const auto config = ip::CurationConfig::defaults();
  ip::Rng rng(31337);
  std::size_t tokens_seen = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::string text = random_text(rng);
    const auto first = ip::curate_text({"c", "u"}, text, config);
    const auto again = ip::curate_text({"c", "u"}, first.normalized_text, config);
    if (again.tokens != first.tokens || again.lemmas != first.lemmas ||
        again.normalized_text != first.normalized_text) {
      return fail("idempotence on string " + std::to_string(i));
    }

    const auto all = first.all_tokens();
    tokens_seen += all.size();
    if (first.tokens.size() + first.removed_stopwords.size() != all.size()) return fail("partition size on string " + std::to_string(i));
    std::vector<std::string> merged;
    std::size_t k = 0, r = 0;
    for (std::size_t p = 0; p < all.size(); ++p) {
      if (r < first.removed_stopwords.size() && first.removed_stopwords[r].first == p) {
        merged.push_back(first.removed_stopwords[r++].second);
      } else if (k < first.tokens.size()) {
        merged.push_back(first.tokens[k++]);
      }
    }
    if (merged != all) return fail("partition order on string " + std::to_string(i));
    if (first.lemmas.size() != all.size()) return fail("lemma alignment on string " + std::to_string(i));
    for (std::size_t t = 0; t < all.size(); ++t) {
      if (!ip::is_valid_token(all[t])) return fail("token grammar on string " + std::to_string(i));
      if (first.lemmas[t].empty()) return fail("empty lemma on string " + std::to_string(i));
    }
    if (ip::tokenize(ip::normalize(text, config.normalization_patterns)) !=
        ip::tokenize(ip::normalize(ascii_upper(text), config.normalization_patterns))) {
      return fail("case invariance on string " + std::to_string(i));
    }
  }
  return pass("10000 random strings (" + std::to_string(tokens_seen) + " tokens): idempotent, partitioned, case-invariant");
}

// ---- real corpus ----------------------------------------------------------------

std::optional<fs::path> msdialog_path() {
  if (const char* env = std::getenv("MSDIALOG_INTENT_PATH"); env && *env) return fs::path(env);
  const auto local = ip::testing::source_dir() / "data" / "external" / "MSDialog-Intent.json";
  if (fs::exists(local)) return local;
  return std::nullopt;
}

Outcome msdialog() {
  const auto path = msdialog_path();
  if (!path) return {Status::Skip, "dataset absent (set MSDIALOG_INTENT_PATH or add data/external/MSDialog-Intent.json)"};
  if (!fs::exists(*path)) return fail("MSDIALOG_INTENT_PATH points at a missing file: " + path->string());
  const auto ingest = ip::ingest_corpus(ip::read_file(*path), ip::FieldMapConfig::msdialog());
  const auto stats = ip::corpus_stats(ingest.conversations);
  const std::string shape = std::to_string(stats.conversation_count) + " conversations, " +
                            std::to_string(stats.tag_vocabulary.size()) + " tags";
  if (stats.conversation_count != 2199 || stats.tag_vocabulary.size() != 12) return fail(shape);

  TempDir dir("accept-msdialog");
  const auto dirs = run_pipeline(dir.path(), *path, data_dir() / "config" / "msdialog_run.json", true);
  const auto metrics = ip::read_json_file(dirs.evaluate / "metrics.json");
  const auto& report = metrics.at("report");
  ip::Json record = {{"dataset", path->filename().string()},
                     {"conversations", stats.conversation_count},
                     {"exact_set_accuracy", report.at("exact_set_accuracy")},
                     {"argmax_accuracy", report.at("argmax_accuracy")},
                     {"micro_f1", report.at("micro").at("f1")},
                     {"macro_f1", report.at("macro").at("f1")},
                     {"macro_auc", report.at("macro_auc")},
                     {"feedback_sentiment", metrics.at("feedback_sentiment")}};
  ip::write_json_file(fs::current_path() / "msdialog_baseline.json", record);
  return pass(shape + "; exact-set accuracy " + fmt(report.at("exact_set_accuracy").get<double>()) +
              ", argmax accuracy " + fmt(report.at("argmax_accuracy").get<double>()) +
              " (recorded in msdialog_baseline.json)");
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_seconds;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"metric-formula oracle", 10, metric_oracle},
      {"AUC oracle", 10, auc_oracle},
      {"softmax suite", 1, softmax_suite},
      {"gradient check", 60, gradient_check},
      {"desk-scale training on the synthetic corpus", 60, desk_training},
      {"determinism of full pipeline runs", 0, determinism},
      {"taxonomy integrity", 0, taxonomy_integrity},
      {"curation idempotence and partition", 0, curation_properties},
      {"MSDialog-Intent ingestion and full pipeline", 900, msdialog},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    double elapsed = 0;
    const auto outcome = timed(c.budget_seconds, c.run, elapsed);
    const char* tag = outcome.status == Status::Pass ? "PASS" : outcome.status == Status::Fail ? "FAIL" : "SKIP";
    if (outcome.status == Status::Fail) ++failures;
    std::cout << tag << "  " << c.name << ": " << outcome.detail << " [" << std::fixed << std::setprecision(2)
              << elapsed << " s]" << std::defaultfloat << "\n"
              << std::flush;
  }
  std::cout << (failures == 0 ? "acceptance: all criteria met or skipped\n"
                              : "acceptance: " + std::to_string(failures) + " criteria failed\n");
  return failures == 0 ? 0 : 1;
}
