// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <fstream>
#include <numeric>

#include "varembed/error.hpp"
#include "varembed/io.hpp"
#include "varembed/textcorpus.hpp"

namespace varembed::textcorpus {

namespace {
bool is_ascii_alpha(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
}  // namespace

bool is_numeric_token(std::string_view token) {
  bool digit = false;
  for (unsigned char c : token) {
    // Non-ASCII bytes may belong to a letter; never call such a token numeric.
    if (is_ascii_alpha(c) || c >= 0x80) return false;
    digit = digit || is_digit(c);
  }
  return digit;
}

std::string normalize_token(std::string_view raw) {
  if (raw.empty()) throw InputError("cannot normalize an empty token");
  if (is_numeric_token(raw)) return std::string(kNum);
  std::string out(raw);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& tokens, std::size_t max_size) {
  if (max_size == 0) throw InputError("vocabulary max_size must be at least 1");
  if (tokens.empty()) throw InputError("cannot build a vocabulary from an empty corpus");

  struct TypeStat {
    std::uint64_t count = 0;
    std::size_t first = 0;
  };
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::string> types;
  std::vector<TypeStat> stats;
  std::uint64_t unk = 0;
  std::uint64_t num = 0;
  for (const auto& raw : tokens) {
    std::string t = normalize_token(raw);
    if (t == kNum) {
      ++num;
      continue;
    }
    if (t == kUnk) {
      ++unk;
      continue;
    }
    auto [it, inserted] = index.try_emplace(t, types.size());
    if (inserted) {
      types.push_back(std::move(t));
      stats.push_back({0, types.size() - 1});
    }
    ++stats[it->second].count;
  }

  std::vector<std::size_t> order(types.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return stats[a].count > stats[b].count;
  });

  Vocabulary v;
  v.words_ = {std::string(kUnk), std::string(kNum)};
  v.counts_ = {unk, num};
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const std::size_t t = order[rank];
    if (rank < max_size) {
      v.words_.push_back(types[t]);
      v.counts_.push_back(stats[t].count);
    } else {
      v.counts_[0] += stats[t].count;
    }
  }
  v.index();
  return v;
}

Vocabulary Vocabulary::from_entries(
    const std::vector<std::pair<std::string, std::uint64_t>>& entries) {
  Vocabulary v;
  for (const auto& [w, c] : entries) {
    v.words_.push_back(w);
    v.counts_.push_back(c);
  }
  v.index();
  return v;
}

void Vocabulary::index() {
  ids_.clear();
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (words_[i].empty()) throw InputError("vocabulary contains an empty word");
    if (!ids_.emplace(words_[i], static_cast<WordId>(i)).second) {
      throw InputError("duplicate vocabulary entry '" + words_[i] + "'");
    }
  }
  const auto unk = ids_.find(std::string(kUnk));
  const auto num = ids_.find(std::string(kNum));
  if (unk == ids_.end() || num == ids_.end()) {
    throw InputError("vocabulary must contain <unk> and <num>");
  }
  unk_id_ = unk->second;
  num_id_ = num->second;
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::vector<std::pair<std::string, std::uint64_t>> entries;
  const auto lines = io::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (io::trim(lines[i]).empty()) continue;
    const auto fields = io::split(lines[i], '\t');
    if (fields.size() != 2 || fields[0].empty()) {
      throw InputError(path + ":" + std::to_string(i + 1) + ": expected word<TAB>count");
    }
    const long long c = io::parse_int(fields[1], "vocabulary count");
    if (c < 0) throw InputError(path + ":" + std::to_string(i + 1) + ": negative count");
    entries.emplace_back(fields[0], static_cast<std::uint64_t>(c));
  }
  return from_entries(entries);
}

void Vocabulary::save(const std::string& path) const {
  io::write_atomically(path, [&](std::ostream& out) {
    for (std::size_t i = 0; i < words_.size(); ++i) out << words_[i] << '\t' << counts_[i] << '\n';
  });
}

const std::string& Vocabulary::word(WordId id) const {
  if (id >= words_.size()) throw InputError("word id " + std::to_string(id) + " out of range");
  return words_[id];
}

std::uint64_t Vocabulary::count(WordId id) const {
  if (id >= counts_.size()) throw InputError("word id " + std::to_string(id) + " out of range");
  return counts_[id];
}

bool Vocabulary::contains(std::string_view surface) const {
  return ids_.find(std::string(surface)) != ids_.end();
}

WordId Vocabulary::id(std::string_view surface) const {
  const auto it = ids_.find(std::string(surface));
  return it == ids_.end() ? unk_id_ : it->second;
}

TokenStream encode(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
  TokenStream s;
  s.tokens.reserve(tokens.size());
  for (const auto& t : tokens) s.tokens.push_back(vocab.id(normalize_token(t)));
  return s;
}

std::vector<std::string> decode(const TokenStream& stream, const Vocabulary& vocab) {
  std::vector<std::string> out;
  out.reserve(stream.size());
  for (WordId id : stream.tokens) out.push_back(vocab.word(id));
  return out;
}

std::vector<std::string> read_corpus(const std::string& path) {
  std::vector<std::string> tokens;
  for (const auto& line : io::read_lines(path)) {
    auto words = io::split_whitespace(line);
    if (words.empty()) continue;
    for (auto& w : words) tokens.push_back(std::move(w));
    tokens.emplace_back(kEos);
  }
  return tokens;
}

}  // namespace varembed::textcorpus
