// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "varembed/error.hpp"
#include "varembed/evalsuite.hpp"
#include "varembed/numerics/optim.hpp"

namespace varembed::evalsuite {

using numerics::Graph;

Tagger::Tagger(const TaggerConfig& config, std::size_t width, std::size_t tags)
    : config_(config), width_(width), tags_(tags) {
  if (config.window == 0 || config.window % 2 == 0) throw InputError("tagger window must be odd");
  if (width == 0 || tags == 0 || config.hidden == 0) throw InputError("tagger dims must be positive");
  numerics::Rng rng(config.seed);
  const double s = config.init_scale;
  w1_ = Tensor(input_width(), config.hidden);
  b1_ = Tensor(1, config.hidden);
  w2_ = Tensor(config.hidden, config.hidden);
  b2_ = Tensor(1, config.hidden);
  w3_ = Tensor(config.hidden, tags);
  b3_ = Tensor(1, tags);
  numerics::fill_uniform(w1_, rng, -s, s);
  numerics::fill_uniform(w2_, rng, -s, s);
  numerics::fill_uniform(w3_, rng, -s, s);
}

numerics::ParameterSet Tagger::parameters() {
  numerics::ParameterSet ps;
  ps.add("w1", w1_);
  ps.add("b1", b1_);
  ps.add("w2", w2_);
  ps.add("b2", b2_);
  ps.add("w3", w3_);
  ps.add("b3", b3_);
  return ps;
}

Tensor Tagger::features(const std::vector<std::vector<TaggedToken>>& sentences,
                        const EmbeddingTable& table) const {
  if (table.width() != width_) throw ShapeError("embedding width does not match the tagger");
  std::unordered_map<std::string, std::vector<double>> cache;
  auto vector_of = [&](const std::string& w) -> const std::vector<double>& {
    auto it = cache.find(w);
    if (it != cache.end()) return it->second;
    std::vector<double> v;
    if (auto found = table.lookup(w)) {
      v = std::move(*found);
    } else if (table.can_impute()) {
      v = table.resolve(w);
    } else {
      v.assign(width_, 0.0);
    }
    return cache.emplace(w, std::move(v)).first->second;
  };

  std::size_t rows = 0;
  for (const auto& s : sentences) rows += s.size();
  Tensor x(rows, input_width());
  const long long half = static_cast<long long>(config_.window / 2);
  std::size_t r = 0;
  for (const auto& s : sentences) {
    const long long n = static_cast<long long>(s.size());
    for (long long i = 0; i < n; ++i, ++r) {
      for (long long o = -half; o <= half; ++o) {
        const long long j = i + o;
        if (j < 0 || j >= n) continue;
        const auto& v = vector_of(s[static_cast<std::size_t>(j)].word);
        std::copy(v.begin(), v.end(), &x(r, static_cast<std::size_t>(o + half) * width_));
      }
    }
  }
  return x;
}

double Tagger::loss(const Tensor& inputs, std::span<const std::size_t> tags,
                    numerics::ParameterSet* params) {
  if (inputs.cols() != input_width()) throw ShapeError("tagger input width mismatch");
  if (tags.size() != inputs.rows()) throw ShapeError("one tag per input row required");
  for (auto t : tags) if (t >= tags_) throw InputError("tag id outside the tagset");
  Graph g(params != nullptr);
  auto ref = [&](const char* name, const Tensor& t) {
    return params ? g.param(params->get(name)) : g.constant_ref(t);
  };
  const auto x = g.constant_ref(inputs);
  const auto h1 = g.tanh(g.add_row(g.matmul(x, ref("w1", w1_)), ref("b1", b1_)));
  const auto h2 = g.tanh(g.add_row(g.matmul(h1, ref("w2", w2_)), ref("b2", b2_)));
  const auto z = g.add_row(g.matmul(h2, ref("w3", w3_)), ref("b3", b3_));
  const auto nll = g.softmax_nll(z, tags);
  const double value = g.value(nll).item();
  if (params) g.backward(nll);
  return value;
}

std::vector<std::size_t> Tagger::predict(const Tensor& inputs) const {
  if (inputs.cols() != input_width()) throw ShapeError("tagger input width mismatch");
  auto layer = [](const Tensor& x, const Tensor& w, const Tensor& b) {
    Tensor y = numerics::matmul(x, w);
    for (std::size_t r = 0; r < y.rows(); ++r)
      for (std::size_t c = 0; c < y.cols(); ++c) y(r, c) += b(0, c);
    return y;
  };
  const Tensor h1 = numerics::tanh(layer(inputs, w1_, b1_));
  const Tensor h2 = numerics::tanh(layer(h1, w2_, b2_));
  const Tensor z = layer(h2, w3_, b3_);
  std::vector<std::size_t> out(z.rows());
  for (std::size_t r = 0; r < z.rows(); ++r) {
    const auto row = z.row(r);
    out[r] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

Tagger tagger_train(const TaggedCorpus& corpus, const EmbeddingTable& table,
                    const TaggerConfig& config) {
  if (corpus.tokens() == 0) throw InputError("tagger training corpus is empty");
  if (config.batch_size == 0) throw InputError("tagger batch size must be positive");
  Tagger tagger(config, table.width(), corpus.tagset.size());
  const Tensor x = tagger.features(corpus.sentences, table);
  std::vector<std::size_t> tags;
  for (const auto& s : corpus.sentences)
    for (const auto& t : s) tags.push_back(t.tag);

  numerics::ParameterSet params = tagger.parameters();
  numerics::RmsProp opt(params, config.learning_rate);
  numerics::Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(tags.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t n = std::min(config.batch_size, order.size() - start);
      Tensor xb(n, x.cols());
      std::vector<std::size_t> tb(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto src = x.row(order[start + i]);
        std::copy(src.begin(), src.end(), xb.row(i).begin());
        tb[i] = tags[order[start + i]];
      }
      params.zero_grads();
      const double l = tagger.loss(xb, tb, &params);
      if (!std::isfinite(l)) throw NumericError("tagger loss became non-finite");
      numerics::clip_global_norm(params, 1.0, static_cast<double>(n));
      opt.step(params);
    }
  }
  return tagger;
}

double FrequencyBucket::error_rate() const {
  return tokens == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(tokens);
}

std::map<std::string, std::uint64_t> word_frequencies(const TaggedCorpus& corpus) {
  std::map<std::string, std::uint64_t> f;
  for (const auto& s : corpus.sentences)
    for (const auto& t : s) ++f[t.word];
  return f;
}

TaggerReport tagger_accuracy(Tagger& tagger, const TaggedCorpus& corpus, const EmbeddingTable& table,
                             const std::map<std::string, std::uint64_t>& train_frequencies) {
  TaggerReport report;
  const Tensor x = tagger.features(corpus.sentences, table);
  const auto predicted = tagger.predict(x);
  report.total = predicted.size();
  std::size_t r = 0;
  for (const auto& s : corpus.sentences) {
    for (const auto& t : s) {
      const bool hit = predicted[r++] == t.tag;
      report.hits.push_back(hit);
      report.correct += hit ? 1 : 0;

      const auto it = train_frequencies.find(t.word);
      const std::uint64_t freq = it == train_frequencies.end() ? 0 : it->second;
      std::uint64_t lo = 0, hi = 100;
      while (freq > hi) {
        lo = hi + 1;
        hi *= 10;
      }
      auto b = std::find_if(report.buckets.begin(), report.buckets.end(),
                            [&](const FrequencyBucket& x) { return x.lo == lo; });
      if (b == report.buckets.end()) {
        report.buckets.push_back({lo, hi, 0, 0});
        b = report.buckets.end() - 1;
      }
      ++b->tokens;
      b->errors += hit ? 0 : 1;
    }
  }
  std::sort(report.buckets.begin(), report.buckets.end(),
            [](const FrequencyBucket& a, const FrequencyBucket& b) { return a.lo < b.lo; });
  report.accuracy = report.total == 0 ? 0.0
                                      : static_cast<double>(report.correct) /
                                            static_cast<double>(report.total);
  return report;
}

}  // namespace varembed::evalsuite
