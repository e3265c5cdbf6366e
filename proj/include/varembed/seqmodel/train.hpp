// SPDX-License-Identifier: Apache-2.0
//
// Minibatch RMSProp training of the language model and its embeddings.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "varembed/numerics/optim.hpp"
#include "varembed/seqmodel/model.hpp"

namespace varembed::seqmodel {

struct TrainConfig {
  ModelKind kind = ModelKind::varembed;
  CellKind cell = CellKind::lstm;
  std::size_t width = 128;   // k
  std::size_t hidden = 128;  // h
  std::size_t epochs = 15;
  double learning_rate = 0.01;
  double lr_decay = 0.97;
  double clip = 1.0;
  // Relative dev-objective improvement below which the rate is halved.
  double plateau_threshold = 1e-3;
  double init_scale = 0.08;
  textcorpus::BatchPlan plan{};
  // The dev stream is scored as one stripe, keeping the short final window.
  textcorpus::BatchPlan dev_plan{1, 35, false};
  std::uint64_t seed = 1;

  // Throws InputError naming the first invalid field.
  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;       // 1-based
  double dev_objective = 0.0;  // dev ELBO (varembed) or dev log-likelihood (additive)
  double learning_rate = 0.0;  // rate used during the epoch
  double wallclock = 0.0;      // seconds spent in the epoch
  double train_loss = 0.0;     // Σ window losses
  bool halved = false;         // plateau detected after this epoch
};

// "epoch dev_objective lr wallclock" per record, preceded by "# seed <n>".
std::string format_training_log(const std::vector<EpochRecord>& log, std::uint64_t seed);

// Learning-rate schedule and plateau bookkeeping, kept separate so it can
// be checkpointed and tested on its own.
struct Schedule {
  double learning_rate = 0.01;
  double best_dev = 0.0;
  bool has_best = false;

  // Applies the end-of-epoch update; returns true if the rate was halved.
  bool update(double dev_objective, double decay, double plateau_threshold);
};

// Dev-set objective used for plateau detection: ELBO with kl_scale = 1 for
// the variational provider, log-likelihood otherwise.
double dev_objective(const textcorpus::TokenStream& dev, const Model& model,
                     const morphoseg::SegmentationTable& seg, const textcorpus::BatchPlan& plan);

class Trainer {
 public:
  // Fresh model initialized from config.seed.
  Trainer(const TrainConfig& config, const morphoseg::SegmentationTable& seg);
  // Resumes from an existing model, optimizer state and schedule.
  Trainer(const TrainConfig& config, const morphoseg::SegmentationTable& seg, Model model,
          std::vector<Tensor> accumulators, Schedule schedule, std::size_t epochs_done);
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  // One pass over `train` followed by the dev evaluation and schedule
  // update. Throws NumericError with epoch/step context on a non-finite loss.
  EpochRecord run_epoch(const textcorpus::TokenStream& train, const textcorpus::TokenStream& dev);
  // Runs until config.epochs epochs are done; calls on_epoch after each.
  void run(const textcorpus::TokenStream& train, const textcorpus::TokenStream& dev,
           const std::function<void(const EpochRecord&)>& on_epoch = {});

  const TrainConfig& config() const { return config_; }
  const Model& model() const { return *model_; }
  Model& model() { return *model_; }
  const morphoseg::SegmentationTable& segmentation() const { return *seg_; }
  const numerics::ParameterSet& parameters() const { return params_; }
  const numerics::RmsProp& optimizer() const { return *optimizer_; }
  const Schedule& schedule() const { return schedule_; }
  std::size_t epochs_done() const { return epochs_done_; }
  const std::vector<EpochRecord>& log() const { return log_; }

 private:
  void bind();

  TrainConfig config_;
  const morphoseg::SegmentationTable* seg_;
  std::unique_ptr<Model> model_;
  numerics::ParameterSet params_;
  std::unique_ptr<numerics::RmsProp> optimizer_;
  Schedule schedule_;
  std::size_t epochs_done_ = 0;
  std::vector<EpochRecord> log_;
};

}  // namespace varembed::seqmodel
