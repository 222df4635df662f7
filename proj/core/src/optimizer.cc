#include <cmath>
#include <stdexcept>

#include "intentpipe/model.h"

namespace intentpipe {

AdamState AdamState::for_params(const ModelParams& params) {
  AdamState s;
  for (const auto& t : params.tensors) {
    s.m.push_back(Eigen::MatrixXd::Zero(t.rows(), t.cols()));
    s.v.push_back(Eigen::MatrixXd::Zero(t.rows(), t.cols()));
  }
  return s;
}

AdamHyper AdamHyper::from(const TrainConfig& config) {
  return AdamHyper{config.effective_learning_rate(), config.beta1, config.beta2, config.adam_epsilon,
                   config.weight_decay};
}

void adamw_step(ModelParams& params, const ModelParams& grads, AdamState& state, const AdamHyper& hyper) {
  if (grads.tensors.size() != params.tensors.size() || state.m.size() != params.tensors.size()) {
    throw std::invalid_argument("optimizer state does not match parameters");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    auto& p = params.tensors[i];
    const auto& g = grads.tensors[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    p *= 1.0 - hyper.learning_rate * hyper.weight_decay;
    m = hyper.beta1 * m + (1.0 - hyper.beta1) * g;
    v = hyper.beta2 * v + (1.0 - hyper.beta2) * g.cwiseProduct(g);
    p.array() -= hyper.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + hyper.epsilon);
  }
}

}  // namespace intentpipe
