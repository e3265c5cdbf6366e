// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numeric>

#include "varembed/error.hpp"
#include "varembed/evalsuite.hpp"

namespace varembed::evalsuite {

std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    // Positions i..j (0-based) share the mean of ranks i+1..j+1.
    const double mean = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t r = i; r <= j; ++r) ranks[order[r]] = mean;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InputError("correlation: inputs differ in length");
  if (xs.size() < 2) throw InputError("correlation: need at least two points");
  for (double v : xs) if (!std::isfinite(v)) throw InputError("correlation: non-finite input");
  for (double v : ys) if (!std::isfinite(v)) throw InputError("correlation: non-finite input");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw NumericError("correlation undefined: zero variance");
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InputError("spearman: inputs differ in length");
  if (xs.size() < 2) throw InputError("spearman: need at least two points");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("cosine: vectors differ in width");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

double binomial_test(std::uint64_t a_only, std::uint64_t b_only) {
  const std::uint64_t n = a_only + b_only;
  if (n == 0) throw InputError("binomial test needs at least one discordant item");
  const std::uint64_t k = std::min(a_only, b_only);
  double tail;
  if (n <= 1000) {
    // Binomial coefficients are exact in double up to C(56, 28) and carry
    // one rounding each beyond; ldexp applies 2^-n exactly.
    double coef = 1.0;
    double acc = 1.0;
    for (std::uint64_t i = 1; i <= k; ++i) {
      coef = coef * static_cast<double>(n - i + 1) / static_cast<double>(i);
      acc += coef;
    }
    tail = std::ldexp(acc, -static_cast<int>(n));
  } else {
    const double ln2 = std::log(2.0);
    double mx = -INFINITY;
    std::vector<double> terms;
    terms.reserve(k + 1);
    for (std::uint64_t i = 0; i <= k; ++i) {
      const double t = std::lgamma(static_cast<double>(n) + 1.0) -
                       std::lgamma(static_cast<double>(i) + 1.0) -
                       std::lgamma(static_cast<double>(n - i) + 1.0) - static_cast<double>(n) * ln2;
      terms.push_back(t);
      mx = std::max(mx, t);
    }
    double s = 0.0;
    for (double t : terms) s += std::exp(t - mx);
    tail = std::exp(mx + std::log(s));
  }
  return std::min(1.0, 2.0 * tail);
}

std::pair<std::uint64_t, std::uint64_t> discordant(const std::vector<bool>& a,
                                                   const std::vector<bool>& b) {
  if (a.size() != b.size()) throw ShapeError("discordant: prediction vectors differ in length");
  std::uint64_t a_only = 0, b_only = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] && !b[i]) ++a_only;
    if (b[i] && !a[i]) ++b_only;
  }
  return {a_only, b_only};
}

QvecResult qvec(const varinfer::WordVectors& embeddings, const QvecOracle& oracle) {
  std::vector<std::size_t> emb_rows, oracle_rows;
  for (std::size_t i = 0; i < oracle.words.size(); ++i) {
    const long long r = embeddings.find(oracle.words[i]);
    if (r >= 0) {
      emb_rows.push_back(static_cast<std::size_t>(r));
      oracle_rows.push_back(i);
    }
  }
  if (emb_rows.size() < 2) throw InputError("qvec: fewer than two words shared with the oracle");
  const std::size_t D = embeddings.width();
  const std::size_t S = oracle.features.size();
  if (D == 0 || S == 0) throw InputError("qvec: empty embedding or oracle matrix");

  auto column = [&](const Tensor& t, const std::vector<std::size_t>& rows, std::size_t c) {
    std::vector<double> v(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) v[i] = t(rows[i], c);
    return v;
  };
  auto is_constant = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  std::vector<std::vector<double>> features(S);
  std::vector<bool> constant_feature(S);
  for (std::size_t s = 0; s < S; ++s) {
    features[s] = column(oracle.values, oracle_rows, s);
    constant_feature[s] = is_constant(features[s]);
  }

  QvecResult result;
  result.shared_words = emb_rows.size();
  double total = 0.0;
  for (std::size_t d = 0; d < D; ++d) {
    const auto dim = column(embeddings.vectors, emb_rows, d);
    const bool constant_dim = is_constant(dim);
    double best = -INFINITY;
    std::size_t best_s = 0;
    for (std::size_t s = 0; s < S; ++s) {
      const double r = (constant_dim || constant_feature[s]) ? 0.0 : pearson(dim, features[s]);
      if (r > best) {
        best = r;
        best_s = s;
      }
    }
    total += best;
    result.alignment.push_back(best_s);
  }
  result.score = 100.0 * total / static_cast<double>(D);
  return result;
}

}  // namespace varembed::evalsuite
