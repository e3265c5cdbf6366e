// SPDX-License-Identifier: Apache-2.0
#include "varembed/varinfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "varembed/error.hpp"
#include "varembed/io.hpp"

namespace varembed::varinfer {

using numerics::Tensor;

VariationalState VariationalState::random(std::size_t words, std::size_t width,
                                          numerics::Rng& rng, double scale) {
  VariationalState s{Tensor(words, width)};
  numerics::fill_uniform(s.logits, rng, -scale, scale);
  return s;
}

std::vector<double> expected_embedding(textcorpus::WordId word, const VariationalState& state) {
  if (word >= state.words()) {
    throw InputError("word id " + std::to_string(word) + " out of range for variational state");
  }
  std::vector<double> gamma(state.width());
  const auto row = state.logits.row(word);
  for (std::size_t i = 0; i < gamma.size(); ++i) gamma[i] = numerics::sigmoid(row[i]);
  return gamma;
}

double bernoulli_kl_logits(double q_logit, double p_logit) {
  // With γ = σ(q): KL = γ(q − p) − softplus(q) + softplus(p).
  const double gamma = numerics::sigmoid(q_logit);
  return gamma * (q_logit - p_logit) - numerics::softplus(q_logit) + numerics::softplus(p_logit);
}

double kl_word(textcorpus::WordId word, const VariationalState& state,
               const morphoseg::SegmentationTable& seg, const morphprior::MorphemeEmbeddings& u) {
  if (word >= state.words()) {
    throw InputError("word id " + std::to_string(word) + " out of range for variational state");
  }
  if (state.width() != u.width()) throw ShapeError("variational and prior widths differ");
  const auto z = morphprior::prior_logits(word, seg, u);
  const auto q = state.logits.row(word);
  double kl = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) kl += bernoulli_kl_logits(q[i], z[i]);
  return kl;
}

double kl_total(const VariationalState& state, const morphoseg::SegmentationTable& seg,
                const morphprior::MorphemeEmbeddings& u) {
  if (seg.word_count() != state.words()) {
    throw ShapeError("segmentation table and variational state cover different vocabularies");
  }
  double kl = 0.0;
  for (std::size_t w = 0; w < state.words(); ++w) {
    kl += kl_word(static_cast<textcorpus::WordId>(w), state, seg, u);
  }
  return kl;
}

long long WordVectors::find(const std::string& word) const {
  const auto it = index_.find(word);
  return it == index_.end() ? -1 : static_cast<long long>(it->second);
}

void WordVectors::reindex() {
  if (words.size() != vectors.rows()) throw ShapeError("word vectors: row count mismatch");
  index_.clear();
  for (std::size_t i = 0; i < words.size(); ++i) index_.emplace(words[i], i);
}

WordVectors load_word_vectors(const std::string& path) {
  const auto lines = io::read_lines(path);
  WordVectors wv;
  std::vector<double> data;
  std::size_t width = 0;
  std::size_t first = 0;
  std::size_t expected_rows = 0;
  bool has_header = false;
  if (!lines.empty()) {
    const auto head = io::split_whitespace(lines[0]);
    if (head.size() == 2 && head[0].find_first_not_of("0123456789") == std::string::npos &&
        head[1].find_first_not_of("0123456789") == std::string::npos) {
      expected_rows = static_cast<std::size_t>(io::parse_int(head[0], "vector count"));
      width = static_cast<std::size_t>(io::parse_int(head[1], "vector width"));
      has_header = true;
      first = 1;
    }
  }
  for (std::size_t i = first; i < lines.size(); ++i) {
    const auto fields = io::split_whitespace(lines[i]);
    if (fields.empty()) continue;
    const std::string where = path + ":" + std::to_string(i + 1);
    if (width == 0) width = fields.size() - 1;
    if (fields.size() != width + 1 || width == 0) {
      throw InputError(where + ": expected a word and " + std::to_string(width) + " values");
    }
    wv.words.push_back(fields[0]);
    for (std::size_t j = 1; j < fields.size(); ++j) data.push_back(io::parse_double(fields[j], where));
  }
  if (has_header && wv.words.size() != expected_rows) {
    throw InputError(path + ": header announces " + std::to_string(expected_rows) +
                     " vectors, found " + std::to_string(wv.words.size()));
  }
  if (wv.words.empty()) throw InputError(path + ": no vectors");
  wv.vectors = Tensor(wv.words.size(), width, std::move(data));
  wv.reindex();
  return wv;
}

void save_word_vectors(const std::string& path, const WordVectors& vectors) {
  io::write_atomically(path, [&](std::ostream& out) {
    out << vectors.words.size() << ' ' << vectors.width() << '\n';
    for (std::size_t r = 0; r < vectors.words.size(); ++r) {
      out << vectors.words[r];
      for (double v : vectors.vectors.row(r)) out << ' ' << io::format_double(v);
      out << '\n';
    }
  });
}

WordVectors export_logits(const VariationalState& state, const textcorpus::Vocabulary& vocab) {
  if (vocab.size() != state.words()) throw ShapeError("vocabulary and variational state differ");
  WordVectors wv;
  wv.words = vocab.words();
  wv.vectors = state.logits;
  wv.reindex();
  return wv;
}

std::size_t warm_start(VariationalState& state, const textcorpus::Vocabulary& vocab,
                       const WordVectors& vectors, double range) {
  if (vectors.width() != state.width()) {
    throw ShapeError("warm-start vectors have width " + std::to_string(vectors.width()) +
                     ", model has " + std::to_string(state.width()));
  }
  const std::size_t k = state.width();
  std::vector<long long> rows(vocab.size());
  std::vector<double> lo(k, std::numeric_limits<double>::infinity());
  std::vector<double> hi(k, -std::numeric_limits<double>::infinity());
  std::size_t covered = 0;
  for (std::size_t w = 0; w < vocab.size(); ++w) {
    rows[w] = vectors.find(vocab.words()[w]);
    if (rows[w] < 0) continue;
    ++covered;
    const auto v = vectors.vectors.row(static_cast<std::size_t>(rows[w]));
    for (std::size_t i = 0; i < k; ++i) {
      lo[i] = std::min(lo[i], v[i]);
      hi[i] = std::max(hi[i], v[i]);
    }
  }
  for (std::size_t w = 0; w < vocab.size(); ++w) {
    if (rows[w] < 0) continue;
    const auto v = vectors.vectors.row(static_cast<std::size_t>(rows[w]));
    for (std::size_t i = 0; i < k; ++i) {
      const double span = hi[i] - lo[i];
      state.logits(w, i) = span > 0 ? -range + 2.0 * range * (v[i] - lo[i]) / span : 0.0;
    }
  }
  return covered;
}

}  // namespace varembed::varinfer
