// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "oracles/oracles.hpp"
#include "varembed/error.hpp"
#include "varembed/evalsuite.hpp"
#include "varembed/numerics/gradcheck.hpp"

using namespace varembed;
using namespace varembed::evalsuite;

namespace {

varinfer::WordVectors vectors(std::vector<std::string> words, Tensor values) {
  varinfer::WordVectors wv;
  wv.words = std::move(words);
  wv.vectors = std::move(values);
  wv.reindex();
  return wv;
}

std::string write_temp(const char* name, const std::string& text) {
  const auto path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST_CASE("spearman fixtures") {
  const std::vector<double> x{1, 2, 3};
  CHECK(spearman(x, std::vector<double>{10, 20, 30}) == doctest::Approx(1.0));
  CHECK(spearman(x, std::vector<double>{3, 2, 1}) == doctest::Approx(-1.0));

  const std::vector<double> a{1, 2, 2, 4}, b{1, 3, 2, 4};
  CHECK(average_ranks(a) == std::vector<double>{1.0, 2.5, 2.5, 4.0});
  CHECK(spearman(a, b) == doctest::Approx(oracle::spearman(a, b)).epsilon(1e-14));

  CHECK_THROWS_AS(spearman(std::vector<double>{1}, std::vector<double>{1}), InputError);
  CHECK_THROWS_AS(spearman(x, std::vector<double>{1, 2}), InputError);
  CHECK_THROWS_AS(spearman(x, std::vector<double>{5, 5, 5}), NumericError);
}

TEST_CASE("spearman matches the oracle and is rank invariant") {
  numerics::Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> xs(30), ys(30);
    for (std::size_t i = 0; i < 30; ++i) {
      xs[i] = std::floor(rng.uniform(0.0, 8.0));
      ys[i] = xs[i] + rng.uniform(-3.0, 3.0);
    }
    const double rho = spearman(xs, ys);
    CHECK(rho == doctest::Approx(oracle::spearman(xs, ys)).epsilon(1e-12));
    std::vector<double> tx(xs.size()), ty(ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      tx[i] = std::exp(xs[i]) - 7.0;
      ty[i] = ys[i] * ys[i] * ys[i];
    }
    CHECK(spearman(tx, ty) == doctest::Approx(rho).epsilon(1e-12));
  }
}

TEST_CASE("pearson and cosine") {
  const std::vector<double> a{1, 2, 3, 4}, b{2, 1, 4, 3};
  CHECK(pearson(a, b) == doctest::Approx(oracle::pearson(a, b)));
  CHECK(cosine(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 0.0);
  CHECK(cosine(std::vector<double>{1, 1}, std::vector<double>{2, 2}) == doctest::Approx(1.0));
  CHECK(cosine(std::vector<double>{0, 0}, std::vector<double>{2, 2}) == 0.0);
}

TEST_CASE("binomial test") {
  CHECK(binomial_test(5, 5) == 1.0);
  CHECK(binomial_test(10, 0) == doctest::Approx(std::ldexp(1.0, -9)).epsilon(1e-15));
  CHECK(binomial_test(8, 2) == doctest::Approx(0.109375).epsilon(1e-15));
  CHECK_THROWS_AS(binomial_test(0, 0), InputError);
  for (unsigned a = 0; a <= 30; a += 3) {
    for (unsigned b = 0; b <= 30; b += 4) {
      if (a + b == 0) continue;
      CHECK(binomial_test(a, b) == binomial_test(b, a));
      CHECK(binomial_test(a, b) == doctest::Approx(oracle::binomial_two_tailed(a, b)).epsilon(1e-12));
    }
  }
  const double large = binomial_test(600, 500);
  CHECK(large > 0.0);
  CHECK(large < 0.01);
  CHECK(binomial_test(1000, 1001) == doctest::Approx(1.0));

  const std::vector<bool> x{true, true, false, false}, y{true, false, true, true};
  CHECK(discordant(x, y) == std::pair<std::uint64_t, std::uint64_t>{1, 2});
}

TEST_CASE("similarity dataset parsing") {
  const auto ds = parse_similarity({"# header", "tiger\tcat\t7.35", "", "king queen 8.5"}, "t");
  REQUIRE(ds.pairs.size() == 2);
  CHECK(ds.pairs[0].first == "tiger");
  CHECK(ds.pairs[1].score == 8.5);
  CHECK_THROWS_AS(parse_similarity({"a\tb"}, "t"), InputError);
  CHECK_THROWS_AS(parse_similarity({"a\tb\tnan"}, "t"), InputError);
  CHECK_THROWS_AS(parse_similarity({"# only"}, "t"), InputError);
}

TEST_CASE("word similarity modes") {
  SimilarityDataset ds;
  ds.pairs = {{"a", "b", 1.0}, {"a", "c", 2.0}, {"a", "d", 3.0}, {"a", "zz", 4.0}};
  Tensor t(4, 2);
  t(0, 0) = 1.0;                 // a = (1, 0)
  t(1, 1) = 1.0;                 // b orthogonal
  t(2, 0) = 1.0, t(2, 1) = 1.0;  // c at 45°
  t(3, 0) = 1.0, t(3, 1) = 0.1;  // d close to a
  EmbeddingTable fixed{vectors({"a", "b", "c", "d"}, t), {}, "fixed"};

  const auto in = eval_wordsim(ds, fixed, WordsimMode::in_vocab);
  CHECK(in.pairs_used == 3);
  CHECK(in.pairs_skipped == 1);
  CHECK(in.rho == doctest::Approx(100.0));
  CHECK_THROWS_AS(eval_wordsim(ds, fixed, WordsimMode::all), UnsupportedError);

  std::size_t calls = 0;
  EmbeddingTable imputing = fixed;
  imputing.imputer = [&calls](std::string_view) {
    ++calls;
    return std::vector<double>{1.0, 0.0};
  };
  const auto in2 = eval_wordsim(ds, imputing, WordsimMode::in_vocab);
  CHECK(calls == 0);
  CHECK(in2.rho == in.rho);
  const auto all = eval_wordsim(ds, imputing, WordsimMode::all);
  CHECK(calls > 0);
  CHECK(all.pairs_used == 4);
  CHECK(all.rho == doctest::Approx(100.0));

  ds.pairs.pop_back();
  CHECK(eval_wordsim(ds, imputing, WordsimMode::all).rho == in.rho);
  CHECK(parse_wordsim_mode("in-vocab") == WordsimMode::in_vocab);
  CHECK_THROWS(parse_wordsim_mode("some"));
}

TEST_CASE("qvec oracle parsing") {
  const auto o = parse_qvec_oracle({"cat\tnoun.animal:0.8 noun.food:0.2", "eat\tverb.consumption:1"}, "o");
  CHECK(o.words.size() == 2);
  CHECK(o.features.size() == 3);
  CHECK_THROWS_AS(parse_qvec_oracle({"cat\tnoun.animal:-1"}, "o"), InputError);
  CHECK_THROWS_AS(parse_qvec_oracle({"cat\tnoun.animal:0"}, "o"), InputError);
  CHECK_THROWS_AS(parse_qvec_oracle({"cat\tbroken"}, "o"), InputError);
}

TEST_CASE("qvec scores") {
  numerics::Rng rng(5);
  QvecOracle o;
  const std::size_t n = 500, s = 8;
  o.values = Tensor(n, s);
  for (std::size_t i = 0; i < n; ++i) {
    o.words.push_back("w" + std::to_string(i));
    for (std::size_t j = 0; j < s; ++j) o.values(i, j) = rng.uniform();
  }
  for (std::size_t j = 0; j < s; ++j) o.features.push_back("f" + std::to_string(j));

  const auto self = qvec(vectors(o.words, o.values), o);
  CHECK(self.score == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(self.shared_words == n);
  for (std::size_t d = 0; d < s; ++d) CHECK(self.alignment[d] == d);

  Tensor noise(n, s);
  for (double& v : noise.data()) v = rng.uniform(-1.0, 1.0);
  const auto random = qvec(vectors(o.words, noise), o);
  CHECK(std::abs(random.score) < 15.0);
  CHECK(random.score <= 100.0);

  QvecOracle one;
  one.words = {"a", "b", "c"};
  one.features = {"f"};
  one.values = Tensor(3, 1, std::vector<double>{0.0, 1.0, 3.0});
  const auto neg = qvec(vectors(one.words, Tensor(3, 1, std::vector<double>{0.0, -1.0, -3.0})), one);
  CHECK(neg.score == doctest::Approx(-100.0).epsilon(1e-12));
  const auto flat = qvec(vectors(one.words, Tensor(3, 1, 2.0)), one);
  CHECK(flat.score == 0.0);
  CHECK_THROWS(qvec(vectors({"a", "zz"}, Tensor(2, 1)), one));
}

TEST_CASE("tagged corpus loaders") {
  const auto c = parse_tagged({"The_DT dog_NN barks_VBZ", "", "A_DT cat_NN"}, {}, "t");
  CHECK(c.sentences.size() == 2);
  CHECK(c.tokens() == 5);
  CHECK(c.tagset == std::vector<std::string>{"DT", "NN", "VBZ"});

  const auto path = write_temp("varembed_tagged.tsv", "The\tDT\ndog\tNN\n\nA\tDT\ncat\tNN\n");
  const auto two = load_tagged(path);
  CHECK(two.sentences.size() == 2);
  CHECK(two.sentences[1][1].word == "cat");
  CHECK(two.tagset[two.sentences[1][1].tag] == "NN");
  const auto shared = load_tagged(path, {"NN", "JJ"});
  CHECK(shared.tagset == std::vector<std::string>{"NN", "JJ", "DT"});
  CHECK(shared.sentences[0][1].tag == 0);
  std::filesystem::remove(path);
}

TEST_CASE("tagger shapes, padding and gradients") {
  TaggerConfig cfg;
  cfg.hidden = 4;
  Tagger big(TaggerConfig{}, 128, 45);
  CHECK(big.input_width() == 640);

  Tagger t(cfg, 2, 3);
  EmbeddingTable table{vectors({"a", "b"}, Tensor(2, 2, std::vector<double>{1, 2, 3, 4})), {}, "t"};
  const std::vector<std::vector<TaggedToken>> sent{{{"a", 0}, {"b", 1}, {"zz", 2}}};
  const auto x = t.features(sent, table);
  REQUIRE(x.rows() == 3);
  REQUIRE(x.cols() == 10);
  // Row 0 window: pad pad a b zz.
  const std::vector<double> row0{0, 0, 0, 0, 1, 2, 3, 4, 0, 0};
  for (std::size_t j = 0; j < 10; ++j) CHECK(x(0, j) == row0[j]);

  numerics::Rng rng(2);
  Tensor inputs(4, 10);
  for (double& v : inputs.data()) v = rng.uniform(-1.0, 1.0);
  const std::vector<std::size_t> tags{0, 2, 1, 1};
  auto params = t.parameters();
  // Larger weights give gradients well above the rounding floor.
  for (auto& p : params.all()) {
    for (double& v : p.value->data()) v = rng.uniform(-0.7, 0.7);
  }
  const auto report = numerics::grad_check(
      [&] { return t.loss(inputs, tags, nullptr); },
      [&] {
        params.zero_grads();
        t.loss(inputs, tags, &params);
      },
      params);
  CHECK(report.max_relative_error() < 1e-4);
}

TEST_CASE("tagger training and accuracy report") {
  // Suffix decides the tag: *ed → V, *s → N, other → X.
  TaggedCorpus corpus;
  corpus.tagset = {"N", "V", "X"};
  const std::vector<std::string> stems{"walk", "jump", "talk", "play", "kick", "look"};
  numerics::Rng rng(4);
  Tensor emb(stems.size() * 3, 3);
  std::vector<std::string> words;
  for (std::size_t s = 0; s < stems.size(); ++s) {
    for (std::size_t f = 0; f < 3; ++f) {
      words.push_back(stems[s] + (f == 0 ? "s" : f == 1 ? "ed" : ""));
      emb(words.size() - 1, f) = 1.0;
    }
  }
  EmbeddingTable table{vectors(words, emb), {}, "suffix"};
  for (int i = 0; i < 40; ++i) {
    std::vector<TaggedToken> sent;
    for (int j = 0; j < 5; ++j) {
      const std::size_t w = rng.below(words.size());
      sent.push_back({words[w], w % 3 == 0 ? 0u : w % 3 == 1 ? 1u : 2u});
    }
    corpus.sentences.push_back(sent);
  }
  TaggerConfig cfg;
  cfg.hidden = 16;
  cfg.epochs = 15;
  cfg.learning_rate = 0.02;
  auto tagger = tagger_train(corpus, table, cfg);
  const auto freq = word_frequencies(corpus);
  const auto rep = tagger_accuracy(tagger, corpus, table, freq);
  CHECK(rep.total == corpus.tokens());
  CHECK(rep.accuracy == 1.0);

  // Bucket error rates weighted by size recompose the overall error.
  TaggedCorpus noisy = corpus;
  for (std::size_t i = 0; i < noisy.sentences.size(); i += 3) noisy.sentences[i][0].tag = 2;
  std::map<std::string, std::uint64_t> skewed;
  for (std::size_t i = 0; i < words.size(); ++i) skewed[words[i]] = i * i * 40;
  const auto r2 = tagger_accuracy(tagger, noisy, table, skewed);
  CHECK(r2.accuracy < 1.0);
  double weighted = 0.0;
  std::size_t covered = 0;
  for (const auto& b : r2.buckets) {
    weighted += b.error_rate() * static_cast<double>(b.tokens);
    covered += b.tokens;
  }
  CHECK(covered == r2.total);
  CHECK(std::abs(weighted / static_cast<double>(r2.total) - (1.0 - r2.accuracy)) < 1e-12);
  CHECK(r2.hits.size() == r2.total);
  CHECK(r2.buckets.size() >= 2);

  TaggedCorpus single;
  single.tagset = {"N"};
  single.sentences = {{{"walks", 0}, {"jumps", 0}}};
  cfg.epochs = 1;
  auto one = tagger_train(single, table, cfg);
  CHECK(tagger_accuracy(one, single, table).accuracy == 1.0);
}
