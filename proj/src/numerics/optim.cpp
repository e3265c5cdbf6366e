// SPDX-License-Identifier: Apache-2.0
#include "varembed/numerics/optim.hpp"

#include <cmath>
#include <string>

#include "varembed/error.hpp"

namespace varembed::numerics {

void rmsprop_step(Tensor& param, const Tensor& grad, RmsPropState& state) {
  if (!param.same_shape(grad)) throw ShapeError("rmsprop_step: gradient shape mismatch");
  if (state.accumulator.size() == 0) state.accumulator = Tensor(param.rows(), param.cols());
  if (!state.accumulator.same_shape(param)) {
    throw ShapeError("rmsprop_step: accumulator shape mismatch");
  }
  if (!grad.all_finite()) throw NumericError("rmsprop_step: non-finite gradient");
  const double rho = state.decay;
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    double& acc = state.accumulator[i];
    acc = rho * acc + (1.0 - rho) * g * g;
    param[i] -= state.learning_rate * g / std::sqrt(acc + state.damping);
  }
}

RmsProp::RmsProp(const ParameterSet& params, double learning_rate, double decay, double damping)
    : learning_rate_(learning_rate), decay_(decay), damping_(damping) {
  for (const auto& p : params.all()) accumulators_.emplace_back(p.value->rows(), p.value->cols());
}

void RmsProp::step(ParameterSet& params) {
  if (params.size() != accumulators_.size()) {
    throw ShapeError("RmsProp::step: parameter count changed");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& g = params[i].grad;
    if (!g.all_finite()) {
      throw NumericError("non-finite gradient for parameter '" + params[i].name + "'");
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    RmsPropState state{std::move(accumulators_[i]), decay_, damping_, learning_rate_};
    rmsprop_step(*params[i].value, params[i].grad, state);
    accumulators_[i] = std::move(state.accumulator);
  }
}

ClipResult clip_global_norm(std::vector<Tensor*> grads, double threshold, double batch_size) {
  if (!(threshold > 0)) throw InputError("clip threshold must be positive");
  ClipResult r;
  double sq = 0.0;
  for (const Tensor* g : grads) sq += squared_norm(*g);
  r.norm = std::sqrt(sq);
  if (r.norm / batch_size > threshold) {
    r.factor = threshold * batch_size / r.norm;
    for (Tensor* g : grads)
      for (double& v : g->data()) v *= r.factor;
  }
  return r;
}

ClipResult clip_global_norm(ParameterSet& params, double threshold, double batch_size) {
  std::vector<Tensor*> grads;
  for (auto& p : params.all()) grads.push_back(&p.grad);
  return clip_global_norm(std::move(grads), threshold, batch_size);
}

}  // namespace varembed::numerics
