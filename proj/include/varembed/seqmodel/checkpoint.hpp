// SPDX-License-Identifier: Apache-2.0
//
// Self-describing binary checkpoint: configuration, vocabulary,
// segmentation, every parameter tensor, optimizer state and the schedule.
// The byte layout is documented in docs/checkpoint-format.md.
#pragma once

#include <string>
#include <vector>

#include "varembed/seqmodel/train.hpp"
#include "varembed/textcorpus.hpp"

namespace varembed::seqmodel {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  TrainConfig config;
  Model model;
  textcorpus::Vocabulary vocab;
  morphoseg::SegmentationTable seg;
  std::vector<Tensor> accumulators;  // RMSProp state, bind_parameters order
  Schedule schedule;
  std::size_t epochs_done = 0;
};

Checkpoint make_checkpoint(const Trainer& trainer, const textcorpus::Vocabulary& vocab);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
// Throws InputError on a malformed or truncated file, ShapeError on
// inconsistent dimensions.
Checkpoint load_checkpoint(const std::string& path);

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& source = "<memory>");

}  // namespace varembed::seqmodel
