// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "varembed/numerics/graph.hpp"
#include "varembed/numerics/tensor.hpp"

namespace varembed::numerics {

struct RmsPropState {
  Tensor accumulator;  // running mean of squared gradients, same shape as the parameter
  double decay = 0.9;
  double damping = 1e-8;
  double learning_rate = 0.01;
};

// acc ← ρ·acc + (1−ρ)·g²;  param ← param − η·g/√(acc+ε).
// Throws NumericError if the gradient has a non-finite entry.
void rmsprop_step(Tensor& param, const Tensor& grad, RmsPropState& state);

// RMSProp over every tensor of a ParameterSet, sharing one learning rate.
class RmsProp {
 public:
  RmsProp(const ParameterSet& params, double learning_rate, double decay = 0.9,
          double damping = 1e-8);

  void step(ParameterSet& params);

  double learning_rate() const { return learning_rate_; }
  void set_learning_rate(double lr) { learning_rate_ = lr; }
  double decay() const { return decay_; }
  double damping() const { return damping_; }
  std::vector<Tensor>& accumulators() { return accumulators_; }
  const std::vector<Tensor>& accumulators() const { return accumulators_; }

 private:
  double learning_rate_;
  double decay_;
  double damping_;
  std::vector<Tensor> accumulators_;
};

struct ClipResult {
  double norm = 0.0;   // ‖g‖₂ before clipping
  double factor = 1.0; // multiplier applied to every gradient
};

// If ‖g‖₂ / batch_size > threshold, scales all gradients by
// threshold·batch_size/‖g‖₂; otherwise leaves them untouched.
ClipResult clip_global_norm(std::vector<Tensor*> grads, double threshold, double batch_size = 1.0);
ClipResult clip_global_norm(ParameterSet& params, double threshold, double batch_size = 1.0);

}  // namespace varembed::numerics
