// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <limits>
#include <unordered_set>

#include "varembed/error.hpp"
#include "varembed/io.hpp"
#include "varembed/morphoseg.hpp"

namespace varembed::morphoseg {

bool is_reserved_token(std::string_view word) {
  return word == textcorpus::kUnk || word == textcorpus::kNum || word == textcorpus::kEos;
}

std::vector<std::string> special_token_morphology(std::string_view word) {
  return {std::string(word)};
}

std::vector<std::string_view> utf8_chars(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto lead = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if (lead >= 0xF0 && lead < 0xF8) len = 4;
    else if (lead >= 0xE0) len = 3;
    else if (lead >= 0xC0) len = 2;
    if (i + len > s.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    }
    out.push_back(s.substr(i, len));
    i += len;
  }
  return out;
}

long long SegmentationTable::find_morpheme(std::string_view m) const {
  const auto it = morph_ids_.find(std::string(m));
  return it == morph_ids_.end() ? -1 : static_cast<long long>(it->second);
}

const std::vector<MorphId>& SegmentationTable::segmentation(textcorpus::WordId w) const {
  if (w >= per_word_.size()) {
    throw InputError("no segmentation for word id " + std::to_string(w));
  }
  return per_word_[w];
}

MorphId SegmentationTable::intern(const std::string& m) {
  auto [it, inserted] = morph_ids_.try_emplace(m, static_cast<MorphId>(morphemes_.size()));
  if (inserted) morphemes_.push_back(m);
  return it->second;
}

void SegmentationTable::append_word(const std::vector<std::string>& morphs) {
  if (morphs.empty()) throw InputError("a word needs at least one morpheme");
  if (morphs.size() > kMaxMorphemes) {
    throw InputError("more than " + std::to_string(kMaxMorphemes) + " morphemes");
  }
  std::vector<MorphId> ids;
  std::vector<std::size_t> flat;
  for (const auto& m : morphs) {
    if (m.empty()) throw InputError("empty morpheme");
    ids.push_back(intern(m));
    flat.push_back(ids.back());
  }
  per_word_.push_back(std::move(ids));
  ragged_.push_group(flat);
}

void SegmentationTable::save(const std::string& path, const textcorpus::Vocabulary& vocab) const {
  if (vocab.size() != per_word_.size()) {
    throw ShapeError("segmentation table covers " + std::to_string(per_word_.size()) +
                     " words, vocabulary has " + std::to_string(vocab.size()));
  }
  io::write_atomically(path, [&](std::ostream& out) {
    for (std::size_t w = 0; w < per_word_.size(); ++w) {
      out << vocab.word(static_cast<textcorpus::WordId>(w)) << '\t';
      for (std::size_t i = 0; i < per_word_[w].size(); ++i) {
        if (i) out << ' ';
        out << morphemes_[per_word_[w][i]];
      }
      out << '\n';
    }
  });
}

SegmentationTable parse_segmentations(const std::vector<std::string>& lines,
                                      const textcorpus::Vocabulary& vocab,
                                      const LoadOptions& options, const std::string& source) {
  std::vector<std::vector<std::string>> per_word(vocab.size());
  std::vector<bool> seen(vocab.size(), false);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string where = source + ":" + std::to_string(i + 1);
    const std::string_view line = lines[i];
    if (io::trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      if (line.front() == '#') continue;
      throw InputError(where + ": expected word<TAB>morphemes");
    }
    const std::string word(line.substr(0, tab));
    auto morphs = io::split_whitespace(line.substr(tab + 1));
    if (word.empty() || morphs.empty()) throw InputError(where + ": expected word<TAB>morphemes");
    if (morphs.size() > kMaxMorphemes) {
      throw InputError(where + ": word '" + word + "' has " + std::to_string(morphs.size()) +
                       " morphemes (maximum " + std::to_string(kMaxMorphemes) + ")");
    }
    if (!options.permissive) {
      std::string joined;
      for (const auto& m : morphs) joined += m;
      if (joined != word) {
        throw InputError(where + ": morphemes of '" + word + "' do not concatenate to the word");
      }
    }
    if (!vocab.contains(word) || is_reserved_token(word)) continue;
    const auto id = vocab.id(word);
    if (seen[id]) throw InputError(where + ": duplicate entry for '" + word + "'");
    seen[id] = true;
    per_word[id] = std::move(morphs);
  }
  SegmentationTable table;
  for (std::size_t w = 0; w < vocab.size(); ++w) {
    const auto& word = vocab.word(static_cast<textcorpus::WordId>(w));
    if (is_reserved_token(word)) {
      table.append_word(special_token_morphology(word));
    } else if (per_word[w].empty()) {
      table.append_word({word});
    } else {
      table.append_word(per_word[w]);
    }
  }
  return table;
}

SegmentationTable load_segmentations(const std::string& path,
                                     const textcorpus::Vocabulary& vocab,
                                     const LoadOptions& options) {
  return parse_segmentations(io::read_lines(path), vocab, options, path);
}

OovSegmenter::OovSegmenter(const SegmentationTable& table, const textcorpus::Vocabulary& vocab)
    : table_(&table) {
  if (table.word_count() != vocab.size()) {
    throw ShapeError("segmentation table and vocabulary sizes differ");
  }
  std::unordered_map<std::string, double> counts;
  double total = 0.0;
  for (std::size_t w = 0; w < vocab.size(); ++w) {
    const double c = std::max<double>(1.0, static_cast<double>(vocab.counts()[w]));
    for (MorphId m : table.segmentation(static_cast<textcorpus::WordId>(w))) {
      const auto& s = table.morpheme(m);
      if (is_reserved_token(s)) continue;
      counts[s] += c;
      total += c;
    }
  }
  for (const auto& [m, c] : counts) {
    cost_[m] = -std::log(c / total);
    max_morph_chars_ = std::max(max_morph_chars_, utf8_chars(m).size());
  }
}

std::vector<MorphId> OovSegmenter::segment(std::string_view surface) const {
  const auto chars = utf8_chars(surface);
  const std::size_t n = chars.size();
  if (n == 0) return {};
  std::vector<std::size_t> byte_at(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) byte_at[i + 1] = byte_at[i] + chars[i].size();

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> best(n + 1, kInf);
  std::vector<std::size_t> pieces(n + 1, 0);
  std::vector<std::size_t> back(n + 1, 0);
  best[0] = 0.0;
  for (std::size_t end = 1; end <= n; ++end) {
    const std::size_t lo = end > max_morph_chars_ ? end - max_morph_chars_ : 0;
    for (std::size_t start = lo; start < end; ++start) {
      if (best[start] == kInf) continue;
      const std::string piece(surface.substr(byte_at[start], byte_at[end] - byte_at[start]));
      const auto it = cost_.find(piece);
      if (it == cost_.end()) continue;
      const double c = best[start] + it->second;
      if (c < best[end] || (c == best[end] && pieces[start] + 1 < pieces[end])) {
        best[end] = c;
        pieces[end] = pieces[start] + 1;
        back[end] = start;
      }
    }
  }
  if (best[n] == kInf || pieces[n] > kMaxMorphemes) return {};
  std::vector<MorphId> ids;
  for (std::size_t end = n; end > 0; end = back[end]) {
    const std::size_t start = back[end];
    const auto id = table_->find_morpheme(surface.substr(byte_at[start], byte_at[end] - byte_at[start]));
    ids.push_back(static_cast<MorphId>(id));
  }
  return {ids.rbegin(), ids.rend()};
}

}  // namespace varembed::morphoseg
