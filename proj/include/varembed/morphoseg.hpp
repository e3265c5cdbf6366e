// SPDX-License-Identifier: Apache-2.0
//
// Morphological segmentations for every vocabulary word, either read from a
// "word<TAB>morph morph ..." file or produced by the built-in recursive MDL
// segmenter (a Morfessor-baseline style learner).
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "varembed/numerics/graph.hpp"
#include "varembed/textcorpus.hpp"

namespace varembed::morphoseg {

inline constexpr std::size_t kMaxMorphemes = 16;

using MorphId = std::uint32_t;

// True for <unk>, <num>, </s>: tokens that are always a single morpheme.
bool is_reserved_token(std::string_view word);

class SegmentationTable {
 public:
  SegmentationTable() = default;

  std::size_t morpheme_count() const { return morphemes_.size(); }
  std::size_t word_count() const { return per_word_.size(); }
  const std::string& morpheme(MorphId id) const { return morphemes_.at(id); }
  const std::vector<std::string>& morphemes() const { return morphemes_; }
  // Id of a morpheme string, or -1 if unknown.
  long long find_morpheme(std::string_view m) const;
  const std::vector<MorphId>& segmentation(textcorpus::WordId w) const;

  // Ragged index of every word's morpheme ids, in word-id order; this is the
  // layout the prior consumes.
  const numerics::RaggedIndex& ragged() const { return ragged_; }

  // Appends the segmentation for the next word id. Morph strings are
  // interned. Throws InputError for 0 or more than 16 morphemes.
  void append_word(const std::vector<std::string>& morphs);

  // "word<TAB>m1 m2 ..." per line in word-id order.
  void save(const std::string& path, const textcorpus::Vocabulary& vocab) const;

 private:
  MorphId intern(const std::string& m);

  std::vector<std::string> morphemes_;
  std::unordered_map<std::string, MorphId> morph_ids_;
  std::vector<std::vector<MorphId>> per_word_;
  numerics::RaggedIndex ragged_;
};

struct LoadOptions {
  // Accept file segmentations whose pieces do not concatenate to the word.
  bool permissive = false;
};

// Words missing from the file (and reserved tokens) become monomorphemic.
// Errors name the line number, or the word for >16 morphemes.
SegmentationTable load_segmentations(const std::string& path,
                                     const textcorpus::Vocabulary& vocab,
                                     const LoadOptions& options = {});

// Same as load_segmentations, from in-memory lines.
SegmentationTable parse_segmentations(const std::vector<std::string>& lines,
                                      const textcorpus::Vocabulary& vocab,
                                      const LoadOptions& options = {},
                                      const std::string& source = "<memory>");

// Segmentation of a reserved token: the token itself.
std::vector<std::string> special_token_morphology(std::string_view word);

// Splits UTF-8 text into code points (invalid bytes stand alone).
std::vector<std::string_view> utf8_chars(std::string_view s);

// How corpus frequencies enter the corpus cost: raw counts, ln(1 + count),
// or one per word type.
enum class CountDampening { none, log, ones };
CountDampening parse_dampening(std::string_view s);

struct MdlOptions {
  std::size_t max_morphemes = kMaxMorphemes;
  CountDampening dampening = CountDampening::ones;
  std::size_t max_passes = 20;
  // Stop once a full pass lowers the description length by less than this.
  double min_improvement = 1e-9;
  std::uint64_t seed = 1;
};

// Description length (nats) of a segmented, counted lexicon:
//   lexicon: Σ over distinct morphs of (chars(m) + 1) · ln(A), where A is
//            the character-set size plus one end-of-morph symbol;
//   corpus:  −Σ_m c(m) · ln(c(m) / Σc), c(m) = Σ_w count(w) · occurrences.
// `alphabet_size` excludes the end-of-morph symbol.
struct DescriptionLength {
  double lexicon = 0.0;
  double corpus = 0.0;
  double total() const { return lexicon + corpus; }
};

// Greedy recursive binary splitting under the description length above.
// Each word type is resegmented in turn (seeded order, repeated passes):
// a split is taken only if it strictly lowers the total, and both halves
// are split again recursively, within the 16-morpheme cap.
class MdlSegmenter {
 public:
  explicit MdlSegmenter(MdlOptions options = {}) : options_(options) {}

  // words[i] with counts[i] (dampened per the options, raw counts clamped
  // below at 1). Reserved tokens are kept atomic.
  void fit(const std::vector<std::string>& words, const std::vector<std::uint64_t>& counts);
  // One resegmentation pass over every word; returns the cost decrease.
  double pass();

  const std::vector<std::vector<std::string>>& segmentations() const { return segs_; }
  DescriptionLength cost() const;
  std::size_t alphabet_size() const { return alphabet_size_; }
  std::size_t passes_run() const { return passes_run_; }

 private:
  void add(const std::string& m, double c);
  void remove(const std::string& m, double c);
  double total_cost() const;
  // Decides the segmentation of `s` (count c, not currently in the model)
  // and adds the chosen morphs to the model.
  void resplit(const std::string& s, double c, std::size_t budget, std::vector<std::string>& out);

  MdlOptions options_;
  std::vector<std::string> words_;
  std::vector<double> counts_;
  std::vector<std::vector<std::string>> segs_;
  std::unordered_map<std::string, double> morph_counts_;
  std::size_t alphabet_size_ = 0;
  double log_alphabet_ = 0.0;
  double tokens_ = 0.0;
  double sum_clogc_ = 0.0;
  double lexicon_ = 0.0;
  std::size_t passes_run_ = 0;
};

// Runs the MDL segmenter over the vocabulary counts and builds the table.
SegmentationTable mdl_segment(const textcorpus::Vocabulary& vocab, const MdlOptions& options = {});

// Segments unseen surface forms into morphemes already in a table, by the
// minimum unigram code length −Σ ln p(m), with p(m) estimated from the
// vocabulary counts of the words that use m. If no cover by known morphemes
// exists the result is empty: the caller treats the word as one unknown
// morpheme.
class OovSegmenter {
 public:
  OovSegmenter(const SegmentationTable& table, const textcorpus::Vocabulary& vocab);

  // Known-morpheme ids covering `surface` exactly, or empty.
  std::vector<MorphId> segment(std::string_view surface) const;

 private:
  const SegmentationTable* table_;
  std::unordered_map<std::string, double> cost_;  // −ln p(m)
  std::size_t max_morph_chars_ = 0;
};

}  // namespace varembed::morphoseg
