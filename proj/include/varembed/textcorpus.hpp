// SPDX-License-Identifier: Apache-2.0
//
// Corpus ingestion: token normalization, frequency-capped vocabulary, id
// streams, and the contiguous-stripe minibatch layout used for truncated
// backpropagation through time.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace varembed::textcorpus {

inline constexpr std::string_view kUnk = "<unk>";
inline constexpr std::string_view kNum = "<num>";
// Appended after every input line when reading a corpus file.
inline constexpr std::string_view kEos = "</s>";

using WordId = std::uint32_t;

// Lowercases ASCII letters; tokens with at least one digit and no letter
// (non-ASCII bytes count as letters) become "<num>". Throws InputError on an
// empty token.
std::string normalize_token(std::string_view raw);

bool is_numeric_token(std::string_view token);

class Vocabulary {
 public:
  // Keeps the max_size most frequent normalized types (ties: first
  // occurrence), plus <unk> (id 0) and <num> (id 1). Tokens are normalized
  // here. Throws InputError on an empty corpus or max_size == 0.
  static Vocabulary build(const std::vector<std::string>& tokens, std::size_t max_size);

  // Reads "word<TAB>count" lines in id order. <unk> and <num> must be present.
  static Vocabulary load(const std::string& path);
  void save(const std::string& path) const;
  // Builds from explicit (word, count) pairs in id order.
  static Vocabulary from_entries(const std::vector<std::pair<std::string, std::uint64_t>>& entries);

  std::size_t size() const { return words_.size(); }
  WordId unk_id() const { return unk_id_; }
  WordId num_id() const { return num_id_; }
  const std::string& word(WordId id) const;
  std::uint64_t count(WordId id) const;
  bool contains(std::string_view surface) const;
  // Id of an already-normalized surface form, or unk_id.
  WordId id(std::string_view surface) const;
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }

 private:
  void index();

  std::vector<std::string> words_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, WordId> ids_;
  WordId unk_id_ = 0;
  WordId num_id_ = 1;
};

struct TokenStream {
  std::vector<WordId> tokens;
  std::size_t size() const { return tokens.size(); }
};

// Normalizes then maps to ids; out-of-vocabulary words become <unk>.
TokenStream encode(const std::vector<std::string>& tokens, const Vocabulary& vocab);
std::vector<std::string> decode(const TokenStream& stream, const Vocabulary& vocab);

// Whitespace-tokenized file, one sentence per line; each non-empty line is
// followed by </s>. Tokens are returned raw (not normalized).
std::vector<std::string> read_corpus(const std::string& path);

struct BatchPlan {
  std::size_t batch_size = 25;
  std::size_t bptt_length = 35;
  bool drop_remainder = true;
};

// One truncated-BPTT step: batch_size stripes × `length` positions, stored
// stripe-major (index b * length + t). targets[i] is the token after inputs[i].
struct Window {
  std::size_t batch_size = 0;
  std::size_t length = 0;
  std::vector<WordId> inputs;
  std::vector<WordId> targets;
  // Stream position of inputs[b * length + t].
  std::vector<std::size_t> positions;

  WordId input(std::size_t b, std::size_t t) const { return inputs[b * length + t]; }
  WordId target(std::size_t b, std::size_t t) const { return targets[b * length + t]; }
  std::size_t tokens() const { return inputs.size(); }
};

// The stream is cut into batch_size contiguous stripes of ⌊N/B⌋ tokens (the
// N mod B tail is unused) and each stripe into windows of bptt_length
// inputs. With drop_remainder a trailing short window is omitted; without it
// the short window is emitted. Throws InputError if no full window fits
// (drop_remainder) or a stripe is shorter than two tokens.
std::vector<Window> iterate_batches(const TokenStream& stream, const BatchPlan& plan);

// Number of stream tokens never used as a window input under `plan`.
std::size_t batch_remainder(std::size_t stream_size, const BatchPlan& plan);

}  // namespace varembed::textcorpus
