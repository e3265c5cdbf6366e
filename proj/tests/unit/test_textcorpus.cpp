// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "varembed/error.hpp"
#include "varembed/textcorpus.hpp"

using namespace varembed;
using namespace varembed::textcorpus;

namespace {

TokenStream iota_stream(std::size_t n) {
  TokenStream s;
  for (std::size_t i = 0; i < n; ++i) s.tokens.push_back(static_cast<WordId>(i));
  return s;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("varembed_textcorpus_" + name)).string();
}

}  // namespace

TEST_CASE("normalize_token") {
  CHECK(normalize_token("The") == "the");
  CHECK(normalize_token("1234") == "<num>");
  CHECK(normalize_token("a") == "a");
  CHECK(normalize_token("3.14") == "<num>");
  CHECK(normalize_token("1,000-2") == "<num>");
  CHECK(normalize_token("A4") == "a4");
  CHECK(normalize_token("--") == "--");
  CHECK(normalize_token("Élan") == "Élan");
  CHECK_THROWS_AS(normalize_token(""), InputError);
}

TEST_CASE("build_vocab keeps the most frequent types with first-occurrence ties") {
  const auto v = Vocabulary::build({"a", "a", "b"}, 1);
  CHECK(v.size() == 3);
  CHECK(v.word(v.unk_id()) == "<unk>");
  CHECK(v.word(v.num_id()) == "<num>");
  CHECK(v.contains("a"));
  CHECK_FALSE(v.contains("b"));
  CHECK(v.id("b") == v.unk_id());
  CHECK(v.count(v.unk_id()) == 1);

  const auto both = Vocabulary::build({"a", "b"}, 10);
  CHECK(both.contains("a"));
  CHECK(both.contains("b"));

  const auto tie = Vocabulary::build({"y", "x", "x", "y", "z"}, 1);
  CHECK(tie.contains("y"));
  CHECK_FALSE(tie.contains("x"));

  const auto norm = Vocabulary::build({"The", "the", "THE", "12", "3"}, 5);
  CHECK(norm.size() == 3);
  CHECK(norm.count(norm.id("the")) == 3);
  CHECK(norm.count(norm.num_id()) == 2);

  CHECK_THROWS_AS(Vocabulary::build({}, 5), InputError);
  CHECK_THROWS_AS(Vocabulary::build({"a"}, 0), InputError);
}

TEST_CASE("vocabulary invariants and determinism") {
  std::vector<std::string> tokens;
  for (int i = 0; i < 200; ++i) tokens.push_back("w" + std::to_string((i * 7919) % 37));
  const auto a = Vocabulary::build(tokens, 20);
  const auto b = Vocabulary::build(tokens, 20);
  CHECK(a.words() == b.words());
  CHECK(a.counts() == b.counts());
  CHECK(a.size() <= 22);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.id(a.word(static_cast<WordId>(i))) == i);
}

TEST_CASE("vocabulary file round trip") {
  const auto v = Vocabulary::build({"b", "a", "a", "c"}, 10);
  const auto path = temp_path("vocab.tsv");
  v.save(path);
  const auto w = Vocabulary::load(path);
  CHECK(w.words() == v.words());
  CHECK(w.counts() == v.counts());
  std::filesystem::remove(path);
}

TEST_CASE("encode and decode") {
  const auto v = Vocabulary::build({"a", "b"}, 10);
  const auto s = encode({"a", "zzz"}, v);
  REQUIRE(s.size() == 2);
  CHECK(s.tokens[0] == v.id("a"));
  CHECK(s.tokens[1] == v.unk_id());
  CHECK(encode({}, v).size() == 0);
  CHECK(encode({"<num>"}, v).tokens[0] == v.num_id());
  CHECK(encode({"42"}, v).tokens[0] == v.num_id());
  CHECK(decode(encode({"A", "zzz", "7"}, v), v) == std::vector<std::string>{"a", "<unk>", "<num>"});
}

TEST_CASE("read_corpus appends an end-of-sentence token per non-empty line") {
  const auto path = temp_path("corpus.txt");
  {
    std::ofstream out(path);
    out << "The cat  sat\n\n  a dog\n";
  }
  const auto toks = read_corpus(path);
  CHECK(toks == std::vector<std::string>{"The", "cat", "sat", "</s>", "a", "dog", "</s>"});
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_corpus(path), InputError);
}

TEST_CASE("iterate_batches lays out stripes by hand for N=8, batch=2, bptt=3") {
  const auto windows = iterate_batches(iota_stream(8), {2, 3, true});
  REQUIRE(windows.size() == 1);
  const auto& w = windows[0];
  CHECK(w.length == 3);
  CHECK(w.inputs == std::vector<WordId>{0, 1, 2, 4, 5, 6});
  CHECK(w.targets == std::vector<WordId>{1, 2, 3, 5, 6, 7});
  CHECK(w.positions == std::vector<std::size_t>{0, 1, 2, 4, 5, 6});
  CHECK(w.input(1, 0) == 4);
  CHECK(w.target(1, 2) == 7);
}

TEST_CASE("iterate_batches edge cases") {
  const auto single = iterate_batches(iota_stream(10), {1, 9, true});
  REQUIRE(single.size() == 1);
  CHECK(single[0].inputs.size() == 9);
  CHECK(single[0].targets.back() == 9);

  CHECK_THROWS_AS(iterate_batches(iota_stream(0), {1, 1, true}), InputError);
  CHECK_THROWS_AS(iterate_batches(iota_stream(7), {2, 3, true}), InputError);
  CHECK_THROWS_AS(iterate_batches(iota_stream(3), {2, 1, false}), InputError);

  const auto kept = iterate_batches(iota_stream(23), {2, 3, false});
  REQUIRE(kept.size() == 4);
  CHECK(kept.back().length == 1);
  const auto dropped = iterate_batches(iota_stream(23), {2, 3, true});
  CHECK(dropped.size() == 3);
}

TEST_CASE("window lengths sum to N minus the remainder") {
  for (std::size_t n : {8u, 23u, 100u, 101u, 357u}) {
    for (BatchPlan plan : {BatchPlan{2, 3, true}, BatchPlan{3, 5, false}, BatchPlan{1, 7, true},
                           BatchPlan{4, 2, false}}) {
      const auto stream = iota_stream(n);
      std::vector<Window> ws;
      try {
        ws = iterate_batches(stream, plan);
      } catch (const InputError&) {
        continue;
      }
      std::size_t total = 0;
      for (const auto& w : ws) {
        total += w.tokens();
        for (std::size_t i = 0; i < w.tokens(); ++i) {
          CHECK(w.targets[i] == w.inputs[i] + 1);
          CHECK(w.positions[i] == w.inputs[i]);
        }
      }
      CHECK(total == n - batch_remainder(n, plan));
    }
  }
}

TEST_CASE("state carries: consecutive windows continue each stripe") {
  const auto ws = iterate_batches(iota_stream(40), {2, 4, true});
  REQUIRE(ws.size() >= 2);
  for (std::size_t k = 0; k + 1 < ws.size(); ++k) {
    for (std::size_t b = 0; b < 2; ++b) {
      CHECK(ws[k + 1].input(b, 0) == ws[k].target(b, ws[k].length - 1));
    }
  }
}
