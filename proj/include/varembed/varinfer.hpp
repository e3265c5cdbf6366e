// SPDX-License-Identifier: Apache-2.0
//
// Mean-field variational family over the latent binary embeddings: one
// Bernoulli per (word, bit) with γ = σ(logit), plus the closed-form KL to
// the morphological prior.
#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "varembed/morphoseg.hpp"
#include "varembed/morphprior.hpp"
#include "varembed/numerics/tensor.hpp"
#include "varembed/textcorpus.hpp"

namespace varembed::varinfer {

struct VariationalState {
  numerics::Tensor logits;  // words × k; γ = σ(logits)

  std::size_t words() const { return logits.rows(); }
  std::size_t width() const { return logits.cols(); }
  // Uniform logits in [-scale, scale].
  static VariationalState random(std::size_t words, std::size_t width, numerics::Rng& rng,
                                 double scale = 0.08);
};

// γ_w. Throws InputError for an out-of-range id.
std::vector<double> expected_embedding(textcorpus::WordId word, const VariationalState& state);

// KL(q_w ‖ p_w) = Σ_i γ_i ln(γ_i/p_i) + (1−γ_i) ln((1−γ_i)/(1−p_i)), ≥ 0.
double kl_word(textcorpus::WordId word, const VariationalState& state,
               const morphoseg::SegmentationTable& seg, const morphprior::MorphemeEmbeddings& u);
double kl_total(const VariationalState& state, const morphoseg::SegmentationTable& seg,
                const morphprior::MorphemeEmbeddings& u);
// Elementwise Bernoulli KL between logit-parameterized distributions.
double bernoulli_kl_logits(double q_logit, double p_logit);

// Words with real-valued vectors; the "v_w k" + "word v1 ... vk" text format.
struct WordVectors {
  std::vector<std::string> words;
  numerics::Tensor vectors;

  std::size_t width() const { return vectors.cols(); }
  // Row of `word`, or -1.
  long long find(const std::string& word) const;
  void reindex();

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

// Accepts the format with or without the "count width" header line.
WordVectors load_word_vectors(const std::string& path);
void save_word_vectors(const std::string& path, const WordVectors& vectors);

// The inverse sigmoid of γ for every vocabulary word (exactly the stored
// logits), for downstream evaluation.
WordVectors export_logits(const VariationalState& state, const textcorpus::Vocabulary& vocab);

// Warm start: each coordinate of the external vectors is mapped affinely
// from its [min, max] over the covered words onto [-4, 4]. Words without a
// vector keep their current logits. Returns the number of words covered.
std::size_t warm_start(VariationalState& state, const textcorpus::Vocabulary& vocab,
                       const WordVectors& vectors, double range = 4.0);

}  // namespace varembed::varinfer
