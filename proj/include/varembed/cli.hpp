// SPDX-License-Identifier: Apache-2.0
//
// Command-line pipeline: build-vocab, segment, train, export, impute, eval,
// gradcheck. Settings come from flags, optionally backed by a flat
// "key = value" file given with --config (flags win).
#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "varembed/morphoseg.hpp"
#include "varembed/seqmodel/train.hpp"

namespace varembed::cli {

// Parses "key = value" lines; '#' starts a comment line. Keys may be
// written with '-' or '_'. Throws InputError on malformed or repeated keys.
std::map<std::string, std::string> parse_config(const std::vector<std::string>& lines,
                                                const std::string& source);
std::map<std::string, std::string> load_config(const std::string& path);

struct RunConfig {
  std::string corpus;
  std::string dev;
  std::string vocab;          // optional: built from the corpus when empty
  std::string segmentations;  // optional: MDL segmentation when empty
  std::string out_dir = ".";
  std::string init_vectors;   // optional warm start (varembed only)
  std::string resume;         // optional checkpoint to continue from
  std::size_t max_vocab = 50000;
  bool permissive = false;
  std::string model = "varembed";
  std::string cell = "lstm";
  seqmodel::TrainConfig train;

  // Parses model/cell into `train` and checks fields and required paths.
  seqmodel::TrainConfig resolve() const;
};

void cmd_build_vocab(const std::string& corpus, std::size_t max_size, const std::string& out,
                     std::ostream& log);
void cmd_segment(const std::string& vocab, const std::string& seg_file, bool permissive,
                 const morphoseg::MdlOptions& mdl, const std::string& out, std::ostream& log);
void cmd_train(const RunConfig& config, std::ostream& log);
void cmd_export(const std::string& checkpoint, const std::string& which, const std::string& out,
                std::ostream& log);
void cmd_impute(const std::string& checkpoint, const std::string& words, const std::string& which,
                const std::string& out, std::ostream& log);

struct EvalRequest {
  std::string checkpoint;  // exactly one of checkpoint / embeddings
  std::string embeddings;
  std::string which;       // export kind for checkpoints; default by model kind
  std::string task;        // wordsim, qvec or pos
  std::vector<std::string> datasets;
  std::string mode = "all";
  std::string train_tagged;
  std::string test_tagged;
  std::size_t tagger_hidden = 625;
  std::size_t tagger_epochs = 20;
  std::uint64_t seed = 1;
};
void cmd_eval(const EvalRequest& request, std::ostream& report);

// Returns the largest relative error; prints one line per parameter group.
double cmd_gradcheck(const seqmodel::Dims& dims, std::uint64_t seed, std::ostream& out);

// Entry point; returns the process exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace varembed::cli
