// SPDX-License-Identifier: Apache-2.0
#include "varembed/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace varembed::numerics {

double GradCheckReport::max_relative_error() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.max_relative_error);
  return m;
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(const std::function<double()>& loss,
                           const std::function<void()>& compute_grads, ParameterSet& params,
                           const GradCheckOptions& options) {
  params.zero_grads();
  compute_grads();
  Rng rng(options.seed);
  GradCheckReport report;
  for (auto& p : params.all()) {
    Tensor& value = *p.value;
    std::vector<std::size_t> coords(value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (coords.size() > options.max_coords_per_tensor) {
      for (std::size_t i = 0; i < options.max_coords_per_tensor; ++i) {
        std::swap(coords[i], coords[i + rng.below(coords.size() - i)]);
      }
      coords.resize(options.max_coords_per_tensor);
    }
    GradCheckEntry entry{p.name, 0.0, coords.size()};
    for (std::size_t idx : coords) {
      const double saved = value[idx];
      value[idx] = saved + options.step;
      const double plus = loss();
      value[idx] = saved - options.step;
      const double minus = loss();
      value[idx] = saved;
      const double numeric = (plus - minus) / (2.0 * options.step);
      entry.max_relative_error =
          std::max(entry.max_relative_error, relative_error(p.grad[idx], numeric));
    }
    report.entries.push_back(entry);
  }
  return report;
}

}  // namespace varembed::numerics
