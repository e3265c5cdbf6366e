// SPDX-License-Identifier: Apache-2.0
#include "varembed/seqmodel/train.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "varembed/error.hpp"
#include "varembed/io.hpp"

namespace varembed::seqmodel {

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InputError(std::string("invalid training setting: ") + what);
  };
  require(width >= 1, "k must be at least 1");
  require(hidden >= 1, "h must be at least 1");
  require(epochs >= 1, "epochs must be at least 1");
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "lr must be positive");
  require(lr_decay > 0.0 && lr_decay <= 1.0, "lr_decay must lie in (0, 1]");
  require(clip > 0.0 && std::isfinite(clip), "clip must be positive");
  require(plateau_threshold >= 0.0, "plateau_threshold must be non-negative");
  require(init_scale > 0.0, "init_scale must be positive");
  require(plan.batch_size >= 1 && plan.bptt_length >= 1, "batch and bptt must be at least 1");
  require(dev_plan.batch_size >= 1 && dev_plan.bptt_length >= 1,
          "dev batch and bptt must be at least 1");
}

std::string format_training_log(const std::vector<EpochRecord>& log, std::uint64_t seed) {
  std::ostringstream out;
  out << "# seed " << seed << '\n';
  for (const auto& r : log) {
    out << r.epoch << ' ' << io::format_double(r.dev_objective) << ' '
        << io::format_double(r.learning_rate) << ' ' << io::format_double(r.wallclock) << '\n';
  }
  return out.str();
}

bool Schedule::update(double dev, double decay, double plateau_threshold) {
  bool halve = false;
  if (has_best) {
    const double relative = (dev - best_dev) / std::max(std::abs(best_dev), 1e-12);
    halve = relative < plateau_threshold;
  }
  if (!has_best || dev > best_dev) {
    best_dev = dev;
    has_best = true;
  }
  learning_rate *= decay;
  if (halve) learning_rate *= 0.5;
  return halve;
}

double dev_objective(const textcorpus::TokenStream& dev, const Model& model,
                     const morphoseg::SegmentationTable& seg, const textcorpus::BatchPlan& plan) {
  return elbo(dev, model, seg, plan, 1.0).value();
}

Trainer::Trainer(const TrainConfig& config, const morphoseg::SegmentationTable& seg)
    : config_(config), seg_(&seg) {
  config_.validate();
  numerics::Rng rng(config_.seed);
  Dims dims{seg.word_count(), seg.morpheme_count(), config_.width, config_.hidden, config_.cell};
  model_ = std::make_unique<Model>(init_model(config_.kind, dims, rng, config_.init_scale));
  schedule_.learning_rate = config_.learning_rate;
  bind();
}

Trainer::Trainer(const TrainConfig& config, const morphoseg::SegmentationTable& seg, Model model,
                 std::vector<Tensor> accumulators, Schedule schedule, std::size_t epochs_done)
    : config_(config),
      seg_(&seg),
      model_(std::make_unique<Model>(std::move(model))),
      schedule_(schedule),
      epochs_done_(epochs_done) {
  config_.validate();
  if (model_->vocabulary() != seg.word_count()) {
    throw ShapeError("model vocabulary does not match the segmentation table");
  }
  bind();
  if (!accumulators.empty()) {
    auto& acc = optimizer_->accumulators();
    if (accumulators.size() != acc.size()) throw ShapeError("optimizer state size mismatch");
    for (std::size_t i = 0; i < acc.size(); ++i) {
      if (!accumulators[i].same_shape(acc[i])) {
        throw ShapeError("optimizer state shape mismatch for " + params_[i].name);
      }
      acc[i] = std::move(accumulators[i]);
    }
  }
}

void Trainer::bind() {
  params_ = bind_parameters(*model_);
  optimizer_ = std::make_unique<numerics::RmsProp>(params_, schedule_.learning_rate);
}

EpochRecord Trainer::run_epoch(const textcorpus::TokenStream& train,
                               const textcorpus::TokenStream& dev) {
  const auto start = std::chrono::steady_clock::now();
  const auto windows = textcorpus::iterate_batches(train, config_.plan);
  std::size_t total_tokens = 0;
  for (const auto& w : windows) total_tokens += w.tokens();

  EpochRecord record;
  record.epoch = epochs_done_ + 1;
  record.learning_rate = schedule_.learning_rate;
  optimizer_->set_learning_rate(schedule_.learning_rate);

  CellState state = CellState::zeros(model_->lm.cell, config_.plan.batch_size);
  for (std::size_t step = 0; step < windows.size(); ++step) {
    const auto& w = windows[step];
    const double kl_scale = static_cast<double>(w.tokens()) / static_cast<double>(total_tokens);
    params_.zero_grads();
    WindowTerms terms = window_objective(*model_, *seg_, w, state, kl_scale, &params_);
    if (!std::isfinite(terms.loss())) {
      throw NumericError("non-finite loss at epoch " + std::to_string(record.epoch) + ", step " +
                         std::to_string(step + 1) + " (nll " + io::format_double(terms.nll) +
                         ", kl " + io::format_double(terms.kl) + ")");
    }
    record.train_loss += terms.loss();
    numerics::clip_global_norm(params_, config_.clip, static_cast<double>(w.batch_size));
    try {
      optimizer_->step(params_);
    } catch (const NumericError& e) {
      throw NumericError("epoch " + std::to_string(record.epoch) + ", step " +
                         std::to_string(step + 1) + ": " + e.what());
    }
    state = std::move(terms.final_state);
  }

  record.dev_objective = dev_objective(dev, *model_, *seg_, config_.dev_plan);
  if (!std::isfinite(record.dev_objective)) {
    throw NumericError("non-finite dev objective after epoch " + std::to_string(record.epoch));
  }
  record.halved = schedule_.update(record.dev_objective, config_.lr_decay,
                                   config_.plateau_threshold);
  record.wallclock =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ++epochs_done_;
  log_.push_back(record);
  return record;
}

void Trainer::run(const textcorpus::TokenStream& train, const textcorpus::TokenStream& dev,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  if (train.size() == 0 || dev.size() == 0) throw InputError("training and dev streams must be nonempty");
  while (epochs_done_ < config_.epochs) {
    const EpochRecord r = run_epoch(train, dev);
    if (on_epoch) on_epoch(r);
  }
}

}  // namespace varembed::seqmodel
