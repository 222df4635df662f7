#include "intentpipe/gradcheck.h"

#include <algorithm>
#include <cmath>

#include "intentpipe/rng.h"

namespace intentpipe {

namespace {

double batch_loss(const ModelParams& params, const std::vector<Example>& batch, bool multi_label) {
  double total = 0;
  for (const auto& e : batch) total += loss_from_logits(forward(params, e.input, multi_label).logits, e.target, multi_label);
  return total / static_cast<double>(batch.size());
}

Target random_target(Rng& rng, std::size_t labels, bool multi_label) {
  Target t;
  t.labels.assign(labels, 0);
  if (multi_label) {
    for (auto& v : t.labels) v = rng.below(2) ? 1 : 0;
  } else {
    t.class_index = rng.below(labels);
    t.labels[t.class_index] = 1;
  }
  return t;
}

}  // namespace

GradcheckResult check_gradients(const ModelParams& params, const std::vector<Example>& batch, bool multi_label,
                                const GradcheckOptions& options) {
  std::vector<const Example*> ptrs;
  for (const auto& e : batch) ptrs.push_back(&e);
  const auto analytic = gradients(params, ptrs, multi_label).grads.flatten();
  std::vector<double> values = params.flatten();
  ModelParams probe = params;

  GradcheckResult r;
  r.parameters = values.size();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double original = values[i];
    values[i] = original + options.step;
    probe.unflatten(values);
    const double up = batch_loss(probe, batch, multi_label);
    values[i] = original - options.step;
    probe.unflatten(values);
    const double down = batch_loss(probe, batch, multi_label);
    values[i] = original;
    const double numeric = (up - down) / (2 * options.step);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), options.denominator_floor});
    r.max_relative_error = std::max(r.max_relative_error, std::abs(analytic[i] - numeric) / denom);
  }
  return r;
}

GradcheckSummary run_gradcheck(std::size_t trials, std::uint64_t seed, const GradcheckOptions& options) {
  GradcheckSummary s;
  Rng rng(seed);
  for (Head head : {Head::Linear, Head::Attention}) {
    for (std::size_t t = 0; t < trials; ++t) {
      const bool multi = t % 2 == 0;
      const std::size_t labels = 2 + rng.below(3);
      ModelParams params;
      std::size_t width = 0;
      if (head == Head::Linear) {
        width = 2 + rng.below(200 / labels - 2);
        params = ModelParams::zeros_linear(labels, width);
      } else {
        width = 3 + rng.below(4);
        params = ModelParams::zeros_attention(labels, width, 2 + rng.below(3));
      }
      initialize(params, rng, 0.5);

      std::vector<Example> batch(1 + rng.below(4));
      for (auto& e : batch) {
        if (head == Head::Linear) {
          for (std::uint32_t f = 0; f < width; ++f) {
            if (rng.below(3) == 0) e.input.features.emplace_back(f, rng.uniform(-1.0, 1.0));
          }
        } else {
          const std::size_t len = 1 + rng.below(6);
          for (std::size_t k = 0; k < len; ++k) e.input.tokens.push_back(static_cast<std::uint32_t>(rng.below(width)));
        }
        e.target = random_target(rng, labels, multi);
      }

      const auto r = check_gradients(params, batch, multi, options);
      s.trials.push_back({head, multi, r.parameters, r.max_relative_error});
      s.max_relative_error = std::max(s.max_relative_error, r.max_relative_error);
    }
  }
  s.passed = !s.trials.empty() && s.max_relative_error < options.tolerance;
  return s;
}

Json to_json(const GradcheckSummary& s) {
  std::size_t max_params = 0;
  Json per_head = Json::object();
  for (Head head : {Head::Linear, Head::Attention}) {
    double worst = 0;
    std::size_t n = 0;
    for (const auto& t : s.trials) {
      if (t.head != head) continue;
      worst = std::max(worst, t.max_relative_error);
      max_params = std::max(max_params, t.parameters);
      ++n;
    }
    per_head[std::string(to_string(head))] = Json{{"trials", n}, {"max_relative_error", worst}};
  }
  return Json{{"passed", s.passed},
              {"max_relative_error", s.max_relative_error},
              {"max_parameters", max_params},
              {"heads", per_head}};
}

}  // namespace intentpipe
