// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "varembed/numerics/graph.hpp"

namespace varembed::numerics {

struct GradCheckOptions {
  double step = 1e-5;
  // Tensors larger than this are checked on a random sample of coordinates.
  std::size_t max_coords_per_tensor = 200;
  std::uint64_t seed = 0;
};

struct GradCheckEntry {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t coords_checked = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_relative_error() const;
};

// |a − n| / max(|a|, |n|, 1e-8).
double relative_error(double analytic, double numeric);

// Compares analytic gradients (produced by `compute_grads`, which must fill
// each Parameter::grad) against central differences of `loss`. Parameter
// values are perturbed in place and restored.
GradCheckReport grad_check(const std::function<double()>& loss,
                           const std::function<void()>& compute_grads,
                           ParameterSet& params, const GradCheckOptions& options = {});

}  // namespace varembed::numerics
