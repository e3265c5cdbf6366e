// SPDX-License-Identifier: Apache-2.0
//
// Morpheme-conditioned prior over latent binary word embeddings:
//   b_{w,i} ~ Bernoulli(σ(Σ_{m ∈ M_w} u_{m,i})).
#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "varembed/morphoseg.hpp"
#include "varembed/numerics/tensor.hpp"
#include "varembed/textcorpus.hpp"

namespace varembed::morphprior {

// One k-dimensional embedding per morpheme (rows follow SegmentationTable
// morpheme ids).
struct MorphemeEmbeddings {
  numerics::Tensor u;

  std::size_t width() const { return u.cols(); }
  std::size_t count() const { return u.rows(); }
  // Uniform in [-scale, scale].
  static MorphemeEmbeddings random(std::size_t morphemes, std::size_t width, numerics::Rng& rng,
                                   double scale = 0.08);
};

// Per-bit prior logits Σ_m u_m for one word (the prior is σ of these).
std::vector<double> prior_logits(textcorpus::WordId word, const morphoseg::SegmentationTable& seg,
                                 const MorphemeEmbeddings& u);
// Prior logits for every word, as a (words × k) matrix.
numerics::Tensor prior_logits_all(const morphoseg::SegmentationTable& seg,
                                  const MorphemeEmbeddings& u);

// p_w ∈ (0,1)^k. Throws InputError for a word id without a segmentation.
std::vector<double> prior_prob(textcorpus::WordId word, const morphoseg::SegmentationTable& seg,
                               const MorphemeEmbeddings& u);

// Σ_i b_i log p_i + (1 − b_i) log(1 − p_i). Throws InputError unless every
// b_i is exactly 0 or 1.
double prior_log_likelihood(std::span<const double> b, textcorpus::WordId word,
                            const morphoseg::SegmentationTable& seg, const MorphemeEmbeddings& u);

// Prior imputation for arbitrary surface forms. In-vocabulary words use
// their table segmentation; others are segmented into known morphemes, and
// a form with no such cover counts as a single unknown morpheme contributing
// zero (p = 0.5 everywhere).
class Imputer {
 public:
  Imputer(const textcorpus::Vocabulary& vocab, const morphoseg::SegmentationTable& seg,
          const MorphemeEmbeddings& u);

  // E[b] under the prior. Throws InputError on an empty string.
  std::vector<double> impute(std::string_view surface) const;
  // The summed morpheme logits behind impute(); the inverse sigmoid of it.
  std::vector<double> impute_logits(std::string_view surface) const;
  std::vector<morphoseg::MorphId> morphemes_of(std::string_view surface) const;

 private:
  const textcorpus::Vocabulary* vocab_;
  const morphoseg::SegmentationTable* seg_;
  const MorphemeEmbeddings* u_;
  morphoseg::OovSegmenter oov_;
};

std::vector<double> impute_oov(std::string_view surface, const Imputer& imputer);

// "morpheme v1 ... vk" per line.
void save_morpheme_embeddings(const std::string& path, const morphoseg::SegmentationTable& seg,
                              const numerics::Tensor& table);

}  // namespace varembed::morphprior
