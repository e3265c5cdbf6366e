// SPDX-License-Identifier: Apache-2.0
//
// Embedding evaluation: rank correlation against human similarity scores,
// QVEC alignment with lexical feature oracles, a window-based feedforward
// tagger with frequency-bucketed errors, and an exact binomial test.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "varembed/numerics/graph.hpp"
#include "varembed/numerics/tensor.hpp"
#include "varembed/varinfer.hpp"

namespace varembed::evalsuite {

using numerics::Tensor;

// Tie-averaged 1-based ranks.
std::vector<double> average_ranks(std::span<const double> xs);
// Throws InputError on unequal lengths or fewer than two points,
// NumericError when either input has zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);
double spearman(std::span<const double> xs, std::span<const double> ys);
double cosine(std::span<const double> a, std::span<const double> b);

// Two-tailed exact binomial p-value for the discordant counts with success
// probability 1/2: min(1, 2·P[X ≤ min(a, b)]), X ~ Bin(a + b, 1/2).
double binomial_test(std::uint64_t a_only, std::uint64_t b_only);

struct SimilarityPair {
  std::string first;
  std::string second;
  double score = 0.0;
};

struct SimilarityDataset {
  std::string name;
  std::vector<SimilarityPair> pairs;
};

// "word1<TAB>word2<TAB>score" lines ('#' comments and blank lines skipped).
SimilarityDataset parse_similarity(const std::vector<std::string>& lines, const std::string& name);
SimilarityDataset load_similarity(const std::string& path);

struct QvecOracle {
  std::vector<std::string> words;
  std::vector<std::string> features;
  Tensor values;  // words × features
};

// "word<TAB>feature:value feature:value ..." lines.
QvecOracle parse_qvec_oracle(const std::vector<std::string>& lines, const std::string& source);
QvecOracle load_qvec_oracle(const std::string& path);

struct TaggedToken {
  std::string word;
  std::size_t tag = 0;
};

struct TaggedCorpus {
  std::vector<std::vector<TaggedToken>> sentences;
  std::vector<std::string> tagset;
  std::size_t tokens() const;
};

// Either one sentence per line of "word_TAG" tokens, or "word<TAB>tag"
// lines with blank lines between sentences (detected from the first
// non-blank line). Tags are looked up in, and appended to, `tagset`.
TaggedCorpus parse_tagged(const std::vector<std::string>& lines, std::vector<std::string> tagset,
                          const std::string& source);
TaggedCorpus load_tagged(const std::string& path, std::vector<std::string> tagset = {});

// A word → vector table with an optional imputer for words it lacks.
// Lookups try the surface form, then its normalized form.
struct EmbeddingTable {
  varinfer::WordVectors vectors;
  std::function<std::vector<double>(std::string_view)> imputer;
  std::string description;

  std::size_t width() const { return vectors.width(); }
  bool can_impute() const { return static_cast<bool>(imputer); }
  std::optional<std::vector<double>> lookup(std::string_view word) const;
  // lookup(), falling back to the imputer; throws UnsupportedError
  // ("n/a: no imputer") if neither applies.
  std::vector<double> resolve(std::string_view word) const;
};

enum class WordsimMode { all, in_vocab };
WordsimMode parse_wordsim_mode(std::string_view s);

struct WordsimResult {
  double rho = 0.0;  // Spearman ρ × 100
  std::size_t pairs_used = 0;
  std::size_t pairs_skipped = 0;
};

// Cosine similarity per pair, then Spearman against the human scores. In
// all mode every pair is scored (OOV words imputed); in in-vocab mode pairs
// with an OOV word are skipped and counted.
WordsimResult eval_wordsim(const SimilarityDataset& data, const EmbeddingTable& table,
                           WordsimMode mode);

struct QvecResult {
  double score = 0.0;  // 100 · Σ_d max_s r(d, s) / D
  std::size_t shared_words = 0;
  std::vector<std::size_t> alignment;  // best feature per embedding dimension
};

// Restricted to words in both. Constant columns correlate 0 with everything.
// Throws InputError with fewer than two shared words.
QvecResult qvec(const varinfer::WordVectors& embeddings, const QvecOracle& oracle);

struct TaggerConfig {
  std::size_t window = 5;  // odd; centered on the tagged word
  std::size_t hidden = 625;
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  double init_scale = 0.08;
  std::uint64_t seed = 1;
};

// Window tagger: input = concatenated frozen embeddings of the window
// (zero vectors past sentence edges), two tanh layers, softmax over tags.
class Tagger {
 public:
  Tagger(const TaggerConfig& config, std::size_t width, std::size_t tags);

  std::size_t input_width() const { return config_.window * width_; }
  const TaggerConfig& config() const { return config_; }
  std::size_t tag_count() const { return tags_; }

  // Builds the (rows × input_width) feature matrix for every token.
  Tensor features(const std::vector<std::vector<TaggedToken>>& sentences,
                  const EmbeddingTable& table) const;
  // Σ −log P(tag) over the rows; accumulates gradients into `params` when non-null.
  double loss(const Tensor& inputs, std::span<const std::size_t> tags,
              numerics::ParameterSet* params);
  std::vector<std::size_t> predict(const Tensor& inputs) const;
  numerics::ParameterSet parameters();

 private:
  TaggerConfig config_;
  std::size_t width_;
  std::size_t tags_;
  Tensor w1_, b1_, w2_, b2_, w3_, b3_;
};

Tagger tagger_train(const TaggedCorpus& corpus, const EmbeddingTable& table,
                    const TaggerConfig& config);

struct FrequencyBucket {
  std::uint64_t lo = 0;  // inclusive
  std::uint64_t hi = 0;  // inclusive
  std::size_t tokens = 0;
  std::size_t errors = 0;
  double error_rate() const;
};

struct TaggerReport {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::vector<bool> hits;  // per token, corpus order
  std::vector<FrequencyBucket> buckets;
};

// Training-corpus frequency of every word form.
std::map<std::string, std::uint64_t> word_frequencies(const TaggedCorpus& corpus);

// Buckets: [0, 100], then (10^j, 10^(j+1)] for j ≥ 2.
TaggerReport tagger_accuracy(Tagger& tagger, const TaggedCorpus& corpus, const EmbeddingTable& table,
                             const std::map<std::string, std::uint64_t>& train_frequencies = {});

// Discordant counts between two per-token hit vectors of equal length.
std::pair<std::uint64_t, std::uint64_t> discordant(const std::vector<bool>& a,
                                                   const std::vector<bool>& b);

}  // namespace varembed::evalsuite
