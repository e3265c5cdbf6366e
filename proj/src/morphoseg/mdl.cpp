// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "varembed/error.hpp"
#include "varembed/morphoseg.hpp"
#include "varembed/numerics/tensor.hpp"

namespace varembed::morphoseg {

namespace {

constexpr double kEpsilon = 1e-9;

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace

CountDampening parse_dampening(std::string_view s) {
  if (s == "none") return CountDampening::none;
  if (s == "log") return CountDampening::log;
  if (s == "ones") return CountDampening::ones;
  throw InputError("unknown count dampening '" + std::string(s) + "' (none, log or ones)");
}

void MdlSegmenter::fit(const std::vector<std::string>& words,
                       const std::vector<std::uint64_t>& counts) {
  if (words.size() != counts.size()) throw ShapeError("mdl: words and counts differ in length");
  words_.clear();
  counts_.clear();
  segs_.clear();
  morph_counts_.clear();
  tokens_ = sum_clogc_ = lexicon_ = 0.0;
  passes_run_ = 0;

  std::unordered_set<std::string> alphabet;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (words[i].empty()) throw InputError("mdl: empty word");
    words_.push_back(words[i]);
    const double raw = static_cast<double>(std::max<std::uint64_t>(counts[i], 1));
    switch (options_.dampening) {
      case CountDampening::none: counts_.push_back(raw); break;
      case CountDampening::log: counts_.push_back(std::log1p(raw)); break;
      case CountDampening::ones: counts_.push_back(1.0); break;
    }
    if (is_reserved_token(words[i])) continue;
    for (auto ch : utf8_chars(words[i])) alphabet.emplace(ch);
  }
  alphabet_size_ = alphabet.size();
  log_alphabet_ = std::log(static_cast<double>(alphabet_size_ + 1));

  for (std::size_t i = 0; i < words_.size(); ++i) {
    segs_.push_back({words_[i]});
    if (!is_reserved_token(words_[i])) add(words_[i], counts_[i]);
  }

  double previous = total_cost();
  for (std::size_t p = 0; p < options_.max_passes; ++p) {
    pass();
    const double now = total_cost();
    if (previous - now < options_.min_improvement) break;
    previous = now;
  }
}

double MdlSegmenter::pass() {
  const double start = total_cost();
  numerics::Rng rng(options_.seed + passes_run_);
  std::vector<std::size_t> order(words_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  for (std::size_t w : order) {
    if (is_reserved_token(words_[w])) continue;
    const double c = counts_[w];
    const double before = total_cost();
    for (const auto& m : segs_[w]) remove(m, c);
    std::vector<std::string> fresh;
    resplit(words_[w], c, options_.max_morphemes, fresh);
    if (total_cost() > before + kEpsilon) {
      // Greedy resegmentation came out worse than what we had: restore.
      for (const auto& m : fresh) remove(m, c);
      for (const auto& m : segs_[w]) add(m, c);
    } else {
      segs_[w] = std::move(fresh);
    }
  }

  // Recompute the running sums from scratch to shed rounding drift.
  tokens_ = sum_clogc_ = lexicon_ = 0.0;
  for (const auto& [m, c] : morph_counts_) {
    tokens_ += c;
    sum_clogc_ += xlogx(c);
    lexicon_ += static_cast<double>(utf8_chars(m).size() + 1) * log_alphabet_;
  }
  ++passes_run_;
  return start - total_cost();
}

void MdlSegmenter::add(const std::string& m, double c) {
  double& count = morph_counts_[m];
  if (count == 0.0) lexicon_ += static_cast<double>(utf8_chars(m).size() + 1) * log_alphabet_;
  sum_clogc_ += xlogx(count + c) - xlogx(count);
  count += c;
  tokens_ += c;
}

void MdlSegmenter::remove(const std::string& m, double c) {
  const auto it = morph_counts_.find(m);
  if (it == morph_counts_.end()) throw InputError("mdl: removing unknown morph '" + m + "'");
  const double count = it->second;
  const double next = count - c;
  sum_clogc_ += xlogx(next) - xlogx(count);
  tokens_ -= c;
  if (next <= 1e-12) {
    lexicon_ -= static_cast<double>(utf8_chars(m).size() + 1) * log_alphabet_;
    morph_counts_.erase(it);
  } else {
    it->second = next;
  }
}

double MdlSegmenter::total_cost() const { return lexicon_ + xlogx(tokens_) - sum_clogc_; }

DescriptionLength MdlSegmenter::cost() const {
  return {lexicon_, xlogx(tokens_) - sum_clogc_};
}

void MdlSegmenter::resplit(const std::string& s, double c, std::size_t budget,
                           std::vector<std::string>& out) {
  add(s, c);
  double best = total_cost();
  remove(s, c);

  const auto chars = utf8_chars(s);
  std::size_t best_split = 0;  // byte offset; 0 means "keep whole"
  if (budget >= 2 && chars.size() >= 2) {
    std::size_t offset = 0;
    for (std::size_t i = 0; i + 1 < chars.size(); ++i) {
      offset += chars[i].size();
      const std::string left = s.substr(0, offset);
      const std::string right = s.substr(offset);
      add(left, c);
      add(right, c);
      const double cost = total_cost();
      remove(right, c);
      remove(left, c);
      if (cost < best - kEpsilon) {
        best = cost;
        best_split = offset;
      }
    }
  }

  if (best_split == 0) {
    add(s, c);
    out.push_back(s);
    return;
  }
  const std::string left = s.substr(0, best_split);
  const std::string right = s.substr(best_split);
  add(right, c);
  const std::size_t before = out.size();
  resplit(left, c, budget - 1, out);
  remove(right, c);
  resplit(right, c, budget - (out.size() - before), out);
}

SegmentationTable mdl_segment(const textcorpus::Vocabulary& vocab, const MdlOptions& options) {
  MdlSegmenter seg(options);
  seg.fit(vocab.words(), vocab.counts());
  SegmentationTable table;
  for (std::size_t w = 0; w < vocab.size(); ++w) {
    const auto& word = vocab.words()[w];
    if (is_reserved_token(word)) {
      table.append_word(special_token_morphology(word));
    } else {
      table.append_word(seg.segmentations()[w]);
    }
  }
  return table;
}

}  // namespace varembed::morphoseg
