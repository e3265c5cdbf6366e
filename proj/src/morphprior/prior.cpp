// SPDX-License-Identifier: Apache-2.0
#include "varembed/morphprior.hpp"

#include <cmath>
#include <ostream>

#include "varembed/error.hpp"
#include "varembed/io.hpp"

namespace varembed::morphprior {

using numerics::Tensor;

MorphemeEmbeddings MorphemeEmbeddings::random(std::size_t morphemes, std::size_t width,
                                              numerics::Rng& rng, double scale) {
  MorphemeEmbeddings e{Tensor(morphemes, width)};
  numerics::fill_uniform(e.u, rng, -scale, scale);
  return e;
}

namespace {

std::vector<double> sum_rows(std::span<const morphoseg::MorphId> ids, const MorphemeEmbeddings& u) {
  std::vector<double> z(u.width(), 0.0);
  for (auto m : ids) {
    if (m >= u.count()) throw ShapeError("morpheme id " + std::to_string(m) + " has no embedding");
    const auto row = u.u.row(m);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += row[i];
  }
  return z;
}

std::vector<double> sigmoid_all(std::vector<double> z) {
  for (double& v : z) v = numerics::sigmoid(v);
  return z;
}

}  // namespace

std::vector<double> prior_logits(textcorpus::WordId word, const morphoseg::SegmentationTable& seg,
                                 const MorphemeEmbeddings& u) {
  return sum_rows(seg.segmentation(word), u);
}

Tensor prior_logits_all(const morphoseg::SegmentationTable& seg, const MorphemeEmbeddings& u) {
  Tensor z(seg.word_count(), u.width());
  for (std::size_t w = 0; w < seg.word_count(); ++w) {
    const auto row = prior_logits(static_cast<textcorpus::WordId>(w), seg, u);
    std::copy(row.begin(), row.end(), z.row(w).begin());
  }
  return z;
}

std::vector<double> prior_prob(textcorpus::WordId word, const morphoseg::SegmentationTable& seg,
                               const MorphemeEmbeddings& u) {
  return sigmoid_all(prior_logits(word, seg, u));
}

double prior_log_likelihood(std::span<const double> b, textcorpus::WordId word,
                            const morphoseg::SegmentationTable& seg, const MorphemeEmbeddings& u) {
  if (b.size() != u.width()) {
    throw ShapeError("binary vector has width " + std::to_string(b.size()) + ", prior has " +
                     std::to_string(u.width()));
  }
  const auto z = prior_logits(word, seg, u);
  double ll = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b[i] == 1.0) {
      ll += numerics::log_sigmoid(z[i]);
    } else if (b[i] == 0.0) {
      ll += numerics::log_sigmoid(-z[i]);
    } else {
      throw InputError("prior_log_likelihood: b must be binary");
    }
  }
  return ll;
}

Imputer::Imputer(const textcorpus::Vocabulary& vocab, const morphoseg::SegmentationTable& seg,
                 const MorphemeEmbeddings& u)
    : vocab_(&vocab), seg_(&seg), u_(&u), oov_(seg, vocab) {
  if (u.count() != seg.morpheme_count()) {
    throw ShapeError("morpheme embeddings have " + std::to_string(u.count()) +
                     " rows, segmentation table has " + std::to_string(seg.morpheme_count()) +
                     " morphemes");
  }
}

std::vector<morphoseg::MorphId> Imputer::morphemes_of(std::string_view surface) const {
  if (surface.empty()) throw InputError("cannot impute an embedding for an empty string");
  if (vocab_->contains(surface)) return seg_->segmentation(vocab_->id(surface));
  return oov_.segment(surface);
}

std::vector<double> Imputer::impute_logits(std::string_view surface) const {
  return sum_rows(morphemes_of(surface), *u_);
}

std::vector<double> Imputer::impute(std::string_view surface) const {
  return sigmoid_all(impute_logits(surface));
}

std::vector<double> impute_oov(std::string_view surface, const Imputer& imputer) {
  return imputer.impute(surface);
}

void save_morpheme_embeddings(const std::string& path, const morphoseg::SegmentationTable& seg,
                              const Tensor& table) {
  if (table.rows() != seg.morpheme_count()) {
    throw ShapeError("morpheme table rows do not match the segmentation table");
  }
  io::write_atomically(path, [&](std::ostream& out) {
    for (std::size_t m = 0; m < table.rows(); ++m) {
      out << seg.morpheme(static_cast<morphoseg::MorphId>(m));
      for (double v : table.row(m)) out << ' ' << io::format_double(v);
      out << '\n';
    }
  });
}

}  // namespace varembed::morphprior
