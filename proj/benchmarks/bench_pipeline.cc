#include <benchmark/benchmark.h>

#include "intentpipe/curation.h"
#include "intentpipe/eval.h"
#include "intentpipe/features.h"
#include "intentpipe/model.h"
#include "intentpipe/rng.h"

namespace ip = intentpipe;

namespace {

const char* const kWords[] = {"windows", "update", "boot", "error", "outlook", "password", "reset", "sync",
                              "driver",  "screen", "crash", "thanks", "the",     "is",       "running", "files"};

std::string sentence(ip::Rng& rng, std::size_t words) {
  std::string s;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) s += ' ';
    s += kWords[rng.below(std::size(kWords))];
    if (rng.below(10) == 0) s += "s,";
  }
  return s + " https://answers.example.com/x?y=1";
}

std::vector<ip::Example> random_examples(ip::Rng& rng, std::size_t n, std::size_t width, std::size_t labels) {
  std::vector<ip::Example> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& e = out[i];
    e.source = {"c" + std::to_string(i / 5), std::to_string(i % 5)};
    for (std::uint32_t c = 0; c < width; ++c) {
      if (rng.below(20) == 0) e.input.features.emplace_back(c, rng.uniform());
    }
    for (std::size_t t = 0; t < 12; ++t) e.input.tokens.push_back(static_cast<std::uint32_t>(rng.below(width)));
    e.target.labels.assign(labels, 0);
    e.target.labels[rng.below(labels)] = 1;
  }
  return out;
}

void BM_Curate(benchmark::State& state) {
  const auto config = ip::CurationConfig::defaults();
  ip::Rng rng(1);
  const auto text = sentence(rng, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ip::curate_text({"c", "u"}, text, config));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_Curate)->Arg(16)->Arg(128)->Arg(1024);

void BM_Tfidf(benchmark::State& state) {
  ip::Rng rng(2);
  std::vector<std::vector<std::string>> docs(200);
  for (auto& d : docs) {
    for (int i = 0; i < 30; ++i) d.push_back("t" + std::to_string(rng.below(2000)));
  }
  const auto vocab = ip::Vocabulary::fit(docs);
  std::vector<std::string> query;
  for (int i = 0; i < state.range(0); ++i) query.push_back("t" + std::to_string(rng.below(2000)));
  for (auto _ : state) benchmark::DoNotOptimize(ip::tfidf_transform(query, vocab));
}
BENCHMARK(BM_Tfidf)->Arg(32)->Arg(384);

void BM_Forward(benchmark::State& state) {
  const bool attention = state.range(0) == 1;
  ip::Rng rng(3);
  auto params = attention ? ip::ModelParams::zeros_attention(5, 2000, 16) : ip::ModelParams::zeros_linear(5, 2000);
  ip::initialize(params, rng, 0.05);
  const auto examples = random_examples(rng, 1, 2000, 5);
  for (auto _ : state) benchmark::DoNotOptimize(ip::forward(params, examples[0].input, true));
}
BENCHMARK(BM_Forward)->ArgName("attention")->Arg(0)->Arg(1);

void BM_Gradients(benchmark::State& state) {
  const bool attention = state.range(0) == 1;
  ip::Rng rng(4);
  auto params = attention ? ip::ModelParams::zeros_attention(5, 2000, 16) : ip::ModelParams::zeros_linear(5, 2000);
  ip::initialize(params, rng, 0.05);
  const auto examples = random_examples(rng, 16, 2000, 5);
  std::vector<const ip::Example*> batch;
  for (const auto& e : examples) batch.push_back(&e);
  for (auto _ : state) benchmark::DoNotOptimize(ip::gradients(params, batch, true));
}
BENCHMARK(BM_Gradients)->ArgName("attention")->Arg(0)->Arg(1);

void BM_TrainEpoch(benchmark::State& state) {
  ip::Rng rng(5);
  const std::size_t vocab = 500;
  ip::TrainConfig config;
  config.epochs = 1;
  ip::ModelSpec spec;
  spec.labels = ip::LabelSpace::make(ip::LabelMode::ConsolidatedMultiLabel);
  spec.layout = ip::FeatureLayout::make(vocab, {}, {}, config);
  spec.vocab_size = vocab;
  const auto train = random_examples(rng, static_cast<std::size_t>(state.range(0)), spec.layout.width(), 5);
  auto validation = random_examples(rng, 50, spec.layout.width(), 5);
  for (auto& e : validation) e.source.conversation_id = "v" + e.source.conversation_id;
  for (auto _ : state) benchmark::DoNotOptimize(ip::train(train, validation, spec, config));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainEpoch)->Arg(500)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_Metrics(benchmark::State& state) {
  ip::Rng rng(6);
  const auto n = static_cast<std::size_t>(state.range(0));
  ip::LabelRows preds(n, std::vector<std::uint8_t>(12)), targets(n, std::vector<std::uint8_t>(12));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < 12; ++l) {
      preds[i][l] = rng.below(2);
      targets[i][l] = rng.below(2);
    }
  }
  for (auto _ : state) {
    const auto c = ip::confusion(preds, targets, 12);
    for (const auto& l : c.labels) benchmark::DoNotOptimize(ip::metrics(l));
  }
}
BENCHMARK(BM_Metrics)->Arg(1000)->Arg(10000);

void BM_Auc(benchmark::State& state) {
  ip::Rng rng(7);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> scores(n);
  std::vector<std::uint8_t> targets(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = rng.uniform();
    targets[i] = rng.below(2);
  }
  for (auto _ : state) benchmark::DoNotOptimize(ip::auc_roc(scores, targets));
}
BENCHMARK(BM_Auc)->Arg(1000)->Arg(100000);

}  // namespace
BENCHMARK_MAIN();
