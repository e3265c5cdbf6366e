// SPDX-License-Identifier: Apache-2.0
#include "varembed/seqmodel/toycheck.hpp"

#include <string>

#include "varembed/error.hpp"

namespace varembed::seqmodel {

numerics::GradCheckReport check_window_gradients(ModelKind kind, const ToyProblem& toy,
                                                 const numerics::GradCheckOptions& options) {
  const Dims& d = toy.dims;
  if (d.morphemes < 1 || d.vocabulary < d.morphemes || toy.batch < 1 || toy.length < 1) {
    throw InputError("toy problem needs positive dims and vocabulary >= morphemes");
  }
  numerics::Rng rng(toy.seed);
  Model model = init_model(kind, d, rng, toy.init_scale);
  for (double& b : model.lm.cell.bias.data()) b = rng.uniform(-toy.init_scale, toy.init_scale);

  morphoseg::SegmentationTable seg;
  for (std::size_t w = 0; w < d.vocabulary; ++w) {
    std::vector<std::string> morphs{"m" + std::to_string(w % d.morphemes)};
    if (rng.below(2) == 1) morphs.push_back("m" + std::to_string(rng.below(d.morphemes)));
    seg.append_word(morphs);
  }
  textcorpus::Window window;
  window.batch_size = toy.batch;
  window.length = toy.length;
  for (std::size_t i = 0; i < toy.batch * toy.length; ++i) {
    window.inputs.push_back(static_cast<textcorpus::WordId>(rng.below(d.vocabulary)));
    window.targets.push_back(static_cast<textcorpus::WordId>(rng.below(d.vocabulary)));
    window.positions.push_back(i);
  }
  CellState initial = CellState::zeros(model.lm.cell, toy.batch);
  for (double& v : initial.hidden.data()) v = rng.uniform(-0.5, 0.5);
  for (double& v : initial.memory.data()) v = rng.uniform(-0.5, 0.5);

  numerics::ParameterSet params = bind_parameters(model);
  auto loss = [&] {
    return window_objective(model, seg, window, initial, toy.kl_scale, nullptr).loss();
  };
  auto grads = [&] {
    params.zero_grads();
    window_objective(model, seg, window, initial, toy.kl_scale, &params);
  };
  return numerics::grad_check(loss, grads, params, options);
}

}  // namespace varembed::seqmodel
