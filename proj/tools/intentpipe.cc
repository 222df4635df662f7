// intentpipe: stage-oriented front end for the intent pipeline.
//
//   ingest -> stats -> curate -> featurize -> contextualize -> train -> evaluate -> report
//
// Exit codes: 0 success, 1 configuration or validation error, 2 data error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "intentpipe/error.h"
#include "intentpipe/gradcheck.h"
#include "intentpipe/pipeline.h"

namespace ip = intentpipe;

namespace {

struct Common {
  bool json = false;
  bool from_scratch = false;
};

void add_common(CLI::App* cmd, Common& c, bool cacheable = true) {
  cmd->add_flag("--json", c.json, "Print a machine-readable summary on stdout");
  if (cacheable) cmd->add_flag("--from-scratch", c.from_scratch, "Recompute even when cached outputs are current");
}

int finish(const ip::StageOutcome& outcome, const Common& c, const std::string& stage) {
  if (c.json) {
    std::cout << outcome.summary.dump(2) << "\n";
  } else {
    std::cout << stage << (outcome.cached ? " (cached): " : ": ") << outcome.summary.dump() << "\n";
  }
  return 0;
}

void print_stats(const ip::Json& s) {
  std::cout << "conversations        " << s.at("conversation_count") << "\n"
            << "utterances           " << s.at("utterance_count") << "\n"
            << "valid conversations  " << s.at("valid_count") << "\n"
            << "invalid conversations " << s.at("invalid_count") << "\n"
            << "untagged utterances  " << s.at("untagged_utterance_count") << "\n"
            << "tag vocabulary       " << s.at("tag_vocabulary_size") << "\n";
  for (const auto& [tag, n] : s.at("tag_vocabulary").items()) std::cout << "  " << tag << "\t" << n << "\n";
  std::cout << "turns per conversation\n";
  for (const auto& [turns, n] : s.at("turn_histogram").items()) std::cout << "  " << turns << "\t" << n << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Intent recognition pipeline for multi-turn QA dialogues"};
  app.require_subcommand(1);

  Common common;
  std::string corpus, field_map, in, out, config, lexicons, map, model;
  std::optional<std::string> head, label_mode;
  bool per_sentiment = false;
  std::size_t trials = 100;
  std::uint64_t gradcheck_seed = 1;

  auto* ingest = app.add_subcommand("ingest", "Parse a raw corpus into the canonical layout");
  ingest->add_option("--corpus", corpus, "Corpus JSON file")->required();
  ingest->add_option("--field-map", field_map, "Field map JSON file")->required();
  ingest->add_option("--out", out, "Output directory")->required();
  add_common(ingest, common);

  auto* stats = app.add_subcommand("stats", "Corpus statistics and validation summary");
  stats->add_option("--in", in, "Directory holding corpus.json")->required();
  add_common(stats, common);

  auto* curate = app.add_subcommand("curate", "Normalize, tokenize, remove stopwords, lemmatize");
  curate->add_option("--in", in, "Input directory")->required();
  curate->add_option("--config", config, "Curation config JSON")->required();
  curate->add_option("--out", out, "Output directory")->required();
  add_common(curate, common);

  auto* featurize = app.add_subcommand("featurize", "Split by conversation, fit the vocabulary, extract features");
  featurize->add_option("--in", in, "Input directory")->required();
  featurize->add_option("--lexicons", lexicons, "Lexicon directory")->required();
  featurize->add_option("--out", out, "Output directory")->required();
  featurize->add_option("--config", config, "Run config JSON (split section)");
  add_common(featurize, common);

  auto* contextualize = app.add_subcommand("contextualize", "Label utterances and join per-utterance records");
  contextualize->add_option("--in", in, "Input directory")->required();
  contextualize->add_option("--map", map, "Consolidation map JSON")->required();
  contextualize->add_option("--out", out, "Output directory")->required();
  add_common(contextualize, common);

  auto* train = app.add_subcommand("train", "Train a classifier");
  train->add_option("--in", in, "Input directory")->required();
  train->add_option("--config", config, "Run config JSON")->required();
  train->add_option("--out", out, "Output directory")->required();
  train->add_flag("--per-sentiment", per_sentiment, "Also train one model per sentiment polarity");
  train->add_option("--head", head, "Classifier head")->check(CLI::IsMember({"linear", "attention"}));
  train->add_option("--label-mode", label_mode, "Label space")->check(CLI::IsMember({"raw", "consolidated", "single"}));
  add_common(train, common);

  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on the held-out conversations");
  evaluate->add_option("--model", model, "Checkpoint file")->required();
  evaluate->add_option("--in", in, "Input directory")->required();
  evaluate->add_option("--out", out, "Output directory")->required();
  add_common(evaluate, common);

  auto* report = app.add_subcommand("report", "Record tables, distributions and feature attribution");
  report->add_option("--in", in, "Input directory")->required();
  report->add_option("--out", out, "Output directory")->required();
  add_common(report, common);

  auto* gradcheck = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  gradcheck->add_option("--trials", trials, "Random models per head")->check(CLI::PositiveNumber);
  gradcheck->add_option("--seed", gradcheck_seed, "Seed for the random models");
  add_common(gradcheck, common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  ip::StageOptions options;
  options.from_scratch = common.from_scratch;
  options.log = common.json ? &std::cerr : &std::cout;

  try {
    if (*ingest) return finish(ip::run_ingest(corpus, field_map, out, options), common, "ingest");
    if (*stats) {
      const auto outcome = ip::run_stats(in, options);
      if (common.json) {
        std::cout << outcome.summary.dump(2) << "\n";
      } else {
        print_stats(outcome.summary);
      }
      return 0;
    }
    if (*curate) return finish(ip::run_curate(in, config, out, options), common, "curate");
    if (*featurize) return finish(ip::run_featurize(in, lexicons, out, config, options), common, "featurize");
    if (*contextualize) return finish(ip::run_contextualize(in, map, out, options), common, "contextualize");
    if (*train) {
      ip::TrainOverrides o;
      if (head) o.head = ip::parse_head(*head);
      if (label_mode) o.label_mode = ip::parse_label_mode(*label_mode);
      o.per_sentiment = per_sentiment;
      return finish(ip::run_train(in, config, out, o, options), common, "train");
    }
    if (*evaluate) return finish(ip::run_evaluate(model, in, out, options), common, "evaluate");
    if (*report) return finish(ip::run_report(in, out, options), common, "report");
    if (*gradcheck) {
      const auto summary = ip::run_gradcheck(trials, gradcheck_seed);
      const auto j = ip::to_json(summary);
      if (common.json) {
        std::cout << j.dump(2) << "\n";
      } else {
        std::cout << "gradcheck: " << summary.trials.size() << " models, max relative error "
                  << summary.max_relative_error << (summary.passed ? " (pass)" : " (FAIL)") << "\n";
      }
      return summary.passed ? 0 : 1;
    }
  } catch (const ip::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ip::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
