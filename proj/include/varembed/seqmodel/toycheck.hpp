// SPDX-License-Identifier: Apache-2.0
//
// Finite-difference verification of the full minibatch objective on a
// random toy problem.
#pragma once

#include <cstdint>

#include "varembed/numerics/gradcheck.hpp"
#include "varembed/seqmodel/model.hpp"

namespace varembed::seqmodel {

struct ToyProblem {
  Dims dims{6, 3, 4, 4, CellKind::lstm};
  std::size_t batch = 2;
  std::size_t length = 3;
  double kl_scale = 0.37;
  double init_scale = 0.5;
  std::uint64_t seed = 7;
};

// Random model, segmentation (1 or 2 morphemes per word, every morpheme
// used), window and nonzero initial state; compares the analytic gradient
// of window_objective against central differences for every parameter.
numerics::GradCheckReport check_window_gradients(ModelKind kind, const ToyProblem& toy,
                                                 const numerics::GradCheckOptions& options = {});

}  // namespace varembed::seqmodel
