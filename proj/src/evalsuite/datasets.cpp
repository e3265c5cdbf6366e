// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <unordered_map>

#include "varembed/error.hpp"
#include "varembed/evalsuite.hpp"
#include "varembed/io.hpp"

namespace varembed::evalsuite {

namespace {

std::string where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line + 1) + ": ";
}

}  // namespace

SimilarityDataset parse_similarity(const std::vector<std::string>& lines, const std::string& name) {
  SimilarityDataset data;
  data.name = name;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = io::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    auto fields = io::split(line, '\t');
    if (fields.size() != 3) fields = io::split_whitespace(line);
    if (fields.size() != 3) {
      throw InputError(where(name, i) + "expected word1<TAB>word2<TAB>score");
    }
    const double score = io::parse_double(fields[2], "similarity score");
    if (!std::isfinite(score)) throw InputError(where(name, i) + "non-finite score");
    data.pairs.push_back({std::string(io::trim(fields[0])), std::string(io::trim(fields[1])), score});
  }
  if (data.pairs.empty()) throw InputError(name + ": no similarity pairs");
  return data;
}

SimilarityDataset load_similarity(const std::string& path) {
  return parse_similarity(io::read_lines(path), path);
}

QvecOracle parse_qvec_oracle(const std::vector<std::string>& lines, const std::string& source) {
  QvecOracle oracle;
  std::unordered_map<std::string, std::size_t> feature_ids;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = io::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto tokens = io::split_whitespace(line);
    std::vector<std::pair<std::size_t, double>> row;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const auto colon = tokens[t].rfind(':');
      if (colon == std::string::npos || colon == 0) {
        throw InputError(where(source, i) + "expected feature:value, got '" + tokens[t] + "'");
      }
      const std::string feature = tokens[t].substr(0, colon);
      const double value = io::parse_double(std::string_view(tokens[t]).substr(colon + 1), "feature value");
      if (!std::isfinite(value) || value < 0.0) {
        throw InputError(where(source, i) + "feature values must be finite and non-negative");
      }
      auto [it, inserted] = feature_ids.try_emplace(feature, oracle.features.size());
      if (inserted) oracle.features.push_back(feature);
      row.emplace_back(it->second, value);
    }
    oracle.words.push_back(tokens[0]);
    rows.push_back(std::move(row));
  }
  if (oracle.words.empty() || oracle.features.empty()) {
    throw InputError(source + ": oracle has no words or no features");
  }
  oracle.values = Tensor(oracle.words.size(), oracle.features.size());
  bool nonzero = false;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& [c, v] : rows[r]) {
      oracle.values(r, c) = v;
      nonzero = nonzero || v != 0.0;
    }
  }
  if (!nonzero) throw InputError(source + ": oracle has no nonzero feature value");
  return oracle;
}

QvecOracle load_qvec_oracle(const std::string& path) {
  return parse_qvec_oracle(io::read_lines(path), path);
}

std::size_t TaggedCorpus::tokens() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

TaggedCorpus parse_tagged(const std::vector<std::string>& lines, std::vector<std::string> tagset,
                          const std::string& source) {
  TaggedCorpus corpus;
  std::unordered_map<std::string, std::size_t> tag_ids;
  for (std::size_t i = 0; i < tagset.size(); ++i) tag_ids.emplace(tagset[i], i);
  corpus.tagset = std::move(tagset);
  auto tag_id = [&](const std::string& tag) {
    auto [it, inserted] = tag_ids.try_emplace(tag, corpus.tagset.size());
    if (inserted) corpus.tagset.push_back(tag);
    return it->second;
  };

  bool two_column = false;
  for (const auto& l : lines) {
    const auto t = io::trim(l);
    if (t.empty()) continue;
    two_column = t.find('\t') != std::string_view::npos;
    break;
  }

  std::vector<TaggedToken> sentence;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = io::trim(lines[i]);
    if (two_column) {
      if (line.empty()) {
        if (!sentence.empty()) corpus.sentences.push_back(std::move(sentence));
        sentence.clear();
        continue;
      }
      const auto fields = io::split(line, '\t');
      if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
        throw InputError(where(source, i) + "expected word<TAB>tag");
      }
      sentence.push_back({fields[0], tag_id(fields[1])});
    } else {
      if (line.empty()) continue;
      std::vector<TaggedToken> s;
      for (const auto& tok : io::split_whitespace(line)) {
        const auto us = tok.rfind('_');
        if (us == std::string::npos || us == 0 || us + 1 == tok.size()) {
          throw InputError(where(source, i) + "expected word_TAG, got '" + tok + "'");
        }
        s.push_back({tok.substr(0, us), tag_id(tok.substr(us + 1))});
      }
      corpus.sentences.push_back(std::move(s));
    }
  }
  if (!sentence.empty()) corpus.sentences.push_back(std::move(sentence));
  if (corpus.sentences.empty()) throw InputError(source + ": no tagged sentences");
  return corpus;
}

TaggedCorpus load_tagged(const std::string& path, std::vector<std::string> tagset) {
  return parse_tagged(io::read_lines(path), std::move(tagset), path);
}

}  // namespace varembed::evalsuite
