// SPDX-License-Identifier: Apache-2.0
#include "varembed/error.hpp"
#include "varembed/evalsuite.hpp"
#include "varembed/textcorpus.hpp"

namespace varembed::evalsuite {

std::optional<std::vector<double>> EmbeddingTable::lookup(std::string_view word) const {
  long long r = vectors.find(std::string(word));
  if (r < 0 && !word.empty()) r = vectors.find(textcorpus::normalize_token(word));
  if (r < 0) return std::nullopt;
  const auto row = vectors.vectors.row(static_cast<std::size_t>(r));
  return std::vector<double>(row.begin(), row.end());
}

std::vector<double> EmbeddingTable::resolve(std::string_view word) const {
  if (auto v = lookup(word)) return *v;
  if (!imputer) throw UnsupportedError("n/a: no imputer");
  auto v = imputer(word);
  if (v.size() != width()) throw ShapeError("imputed vector width differs from the table");
  return v;
}

WordsimMode parse_wordsim_mode(std::string_view s) {
  if (s == "all") return WordsimMode::all;
  if (s == "in-vocab" || s == "in_vocab") return WordsimMode::in_vocab;
  throw InputError("unknown word-similarity mode '" + std::string(s) + "' (all or in-vocab)");
}

WordsimResult eval_wordsim(const SimilarityDataset& data, const EmbeddingTable& table,
                           WordsimMode mode) {
  if (mode == WordsimMode::all && !table.can_impute()) throw UnsupportedError("n/a: no imputer");
  WordsimResult result;
  std::vector<double> model, human;
  for (const auto& p : data.pairs) {
    std::vector<double> a, b;
    if (mode == WordsimMode::all) {
      a = table.resolve(p.first);
      b = table.resolve(p.second);
    } else {
      auto la = table.lookup(p.first);
      auto lb = table.lookup(p.second);
      if (!la || !lb) {
        ++result.pairs_skipped;
        continue;
      }
      a = std::move(*la);
      b = std::move(*lb);
    }
    model.push_back(cosine(a, b));
    human.push_back(p.score);
  }
  result.pairs_used = model.size();
  result.rho = 100.0 * spearman(model, human);
  return result;
}

}  // namespace varembed::evalsuite
