#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "intentpipe/io.h"
#include "intentpipe/model.h"

namespace intentpipe {

struct GradcheckOptions {
  double step = 1e-5;
  // Relative error uses max(|analytic|, |numeric|, floor) as denominator so
  // near-zero gradients are compared absolutely.
  double denominator_floor = 1e-6;
  double tolerance = 1e-4;
};

struct GradcheckResult {
  double max_relative_error = 0;
  std::size_t parameters = 0;
};

// Central differences on every parameter of `params` for the mean loss of
// `batch`.
GradcheckResult check_gradients(const ModelParams& params, const std::vector<Example>& batch, bool multi_label,
                                const GradcheckOptions& options = {});

struct GradcheckTrial {
  Head head = Head::Linear;
  bool multi_label = true;
  std::size_t parameters = 0;
  double max_relative_error = 0;
};

struct GradcheckSummary {
  std::vector<GradcheckTrial> trials;
  double max_relative_error = 0;
  bool passed = false;
};

// `trials` random tiny models per head (at most 200 parameters each), label
// modes alternating, random inputs and targets.
GradcheckSummary run_gradcheck(std::size_t trials, std::uint64_t seed, const GradcheckOptions& options = {});

Json to_json(const GradcheckSummary& s);

}  // namespace intentpipe
