// SPDX-License-Identifier: Apache-2.0
//
// Recurrent language model over word embeddings. The input embeddings come
// from one of three providers: the variational state (expected embeddings
// γ = σ(logits), regularized towards the morphological prior), the additive
// baseline (word vector + Σ morpheme vectors), or a fixed external table.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "varembed/morphoseg.hpp"
#include "varembed/morphprior.hpp"
#include "varembed/numerics/graph.hpp"
#include "varembed/numerics/tensor.hpp"
#include "varembed/textcorpus.hpp"
#include "varembed/varinfer.hpp"

namespace varembed::seqmodel {

using numerics::Tensor;

enum class CellKind { rnn, lstm };
enum class ModelKind { varembed, additive };

const char* to_string(CellKind kind);
const char* to_string(ModelKind kind);
CellKind parse_cell_kind(std::string_view s);
ModelKind parse_model_kind(std::string_view s);

// h' = σ(x·W + h·U + b) for the RNN. For the LSTM the gate blocks of W, U, b
// are laid out as [input | forget | output | candidate]:
//   i, f, o = σ(·),  g = tanh(·),  c' = f⊙c + i⊙g,  h' = o⊙tanh(c').
struct Recurrence {
  CellKind kind = CellKind::lstm;
  Tensor input_weights;      // k × G·h
  Tensor recurrent_weights;  // h × G·h
  Tensor bias;               // 1 × G·h

  std::size_t gates() const { return kind == CellKind::lstm ? 4 : 1; }
  std::size_t hidden() const { return recurrent_weights.rows(); }
  std::size_t input_width() const { return input_weights.rows(); }
  // Weights uniform in [-scale, scale], biases zero.
  static Recurrence random(CellKind kind, std::size_t input_width, std::size_t hidden,
                           numerics::Rng& rng, double scale = 0.08);
};

struct SeqModelParams {
  Recurrence cell;
  Tensor output;  // vocabulary × h; P(x_{t+1}) = softmax(output · h_t)
};

// Batched recurrent state: batch × h each. `memory` stays empty for the RNN.
struct CellState {
  Tensor hidden;
  Tensor memory;
  static CellState zeros(const Recurrence& cell, std::size_t batch);
};

std::vector<double> rnn_step(std::span<const double> embedding, std::span<const double> h_prev,
                             const Recurrence& cell);

struct LstmState {
  std::vector<double> h;
  std::vector<double> c;
};
LstmState lstm_step(std::span<const double> embedding, const LstmState& prev,
                    const Recurrence& cell);

struct VariationalEmbeddings {
  varinfer::VariationalState state;
  morphprior::MorphemeEmbeddings prior;
};

struct AdditiveEmbeddings {
  Tensor words;      // vocabulary × k
  Tensor morphemes;  // morphemes × k
};

struct FixedEmbeddings {
  Tensor table;  // vocabulary × k
};

using EmbeddingProvider = std::variant<VariationalEmbeddings, AdditiveEmbeddings, FixedEmbeddings>;

// Word vector plus the sum of the word's morpheme vectors.
std::vector<double> compose_additive(textcorpus::WordId word, const AdditiveEmbeddings& emb,
                                     const morphoseg::SegmentationTable& seg);
// Morpheme vectors only (unseen words, or the "morphemes only" view).
std::vector<double> compose_morphemes(std::span<const morphoseg::MorphId> morphs,
                                      const AdditiveEmbeddings& emb);

struct Model {
  SeqModelParams lm;
  EmbeddingProvider embeddings;

  std::size_t vocabulary() const { return lm.output.rows(); }
  std::size_t width() const { return lm.cell.input_width(); }
  std::size_t hidden() const { return lm.cell.hidden(); }
  bool is_variational() const { return std::holds_alternative<VariationalEmbeddings>(embeddings); }
  ModelKind kind() const;
};

struct Dims {
  std::size_t vocabulary = 0;
  std::size_t morphemes = 0;
  std::size_t width = 128;   // k
  std::size_t hidden = 128;  // h
  CellKind cell = CellKind::lstm;
};

// Fresh model with every tensor uniform in [-scale, scale] (biases zero).
// Draws happen in a fixed order from `rng`.
Model init_model(ModelKind kind, const Dims& dims, numerics::Rng& rng, double scale = 0.08);

// Registers every trainable tensor of `model` (names: "gamma_logits" or
// "word_vectors", "morphemes", "input_weights", "recurrent_weights", "bias",
// "output"). Fixed tables are not registered.
numerics::ParameterSet bind_parameters(Model& model);

// Input tables (k·v_w + k·v_m) + output table (h·v_w) + recurrence.
std::uint64_t count_parameters(ModelKind kind, const Dims& dims);

// Per-window objective terms, summed over the window's tokens.
struct WindowTerms {
  double nll = 0.0;
  double kl = 0.0;         // full-vocabulary KL (variational provider only)
  double kl_scale = 0.0;
  double loss() const { return nll + kl_scale * kl; }
  CellState final_state;
};

// Builds the window's graph: expected (or composed) input embeddings,
// recurrence from `initial`, output softmax, and for the variational
// provider kl_scale × KL(Q‖P). When `params` is non-null, gradients of
// loss() are accumulated into it (see bind_parameters).
WindowTerms window_objective(Model& model, const morphoseg::SegmentationTable& seg,
                             const textcorpus::Window& window, const CellState& initial,
                             double kl_scale, numerics::ParameterSet* params);

struct WindowOutput {
  // log P(target) per input position, stripe-major (b * length + t).
  std::vector<double> target_log_probs;
  // Full log-distribution per position (same row order); only if requested.
  Tensor log_probs;
  CellState final_state;
};

WindowOutput forward_window(const Model& model, const morphoseg::SegmentationTable& seg,
                            const textcorpus::Window& window, const CellState& initial,
                            bool full_distribution = false);

struct CorpusScore {
  double nll = 0.0;
  std::size_t tokens = 0;
  double perplexity() const;
};

// −Σ log P over every window of `plan`, state carried within each stripe.
CorpusScore corpus_nll(const textcorpus::TokenStream& stream, const Model& model,
                       const morphoseg::SegmentationTable& seg, const textcorpus::BatchPlan& plan);

struct ElboTerms {
  double log_likelihood = 0.0;  // Σ_t log P(x_t | x_<t; E_q[b])
  double kl = 0.0;              // KL(Q‖P) over the vocabulary
  double kl_scale = 1.0;
  std::size_t tokens = 0;
  double value() const { return log_likelihood - kl_scale * kl; }
};

// Expected log-likelihood minus kl_scale × KL. For non-variational
// providers the KL term is zero.
ElboTerms elbo(const textcorpus::TokenStream& stream, const Model& model,
               const morphoseg::SegmentationTable& seg, const textcorpus::BatchPlan& plan,
               double kl_scale = 1.0);

}  // namespace varembed::seqmodel
