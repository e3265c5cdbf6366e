// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "varembed/cli.hpp"
#include "varembed/error.hpp"
#include "varembed/io.hpp"
#include "varembed/varinfer.hpp"

namespace fs = std::filesystem;
using namespace varembed;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "varembed");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / "varembed_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::vector<std::string> stems{"walk", "jump", "talk", "play"};
    const std::vector<std::string> suffixes{"", "s", "ed", "ing"};
    std::ofstream corpus(path("train.txt")), dev(path("dev.txt"));
    for (int line = 0; line < 60; ++line) {
      for (int j = 0; j < 8; ++j) {
        const auto& w = stems[(line + j) % 4] + suffixes[(line * 3 + j) % 4];
        (line % 6 == 5 ? dev : corpus) << w << (j == 7 ? "\n" : " ");
      }
    }
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("config parsing") {
  const auto kv = cli::parse_config({"# comment", "epochs = 3", "", "init_scale=0.1"}, "c");
  CHECK(kv.at("epochs") == "3");
  CHECK(kv.at("init-scale") == "0.1");
  CHECK_THROWS_AS(cli::parse_config({"epochs 3"}, "c"), InputError);
  CHECK_THROWS_AS(cli::parse_config({"a = 1", "a = 2"}, "c"), InputError);
  CHECK_THROWS_AS(cli::parse_config({" = 1"}, "c"), InputError);
}

TEST_CASE("run config validation") {
  cli::RunConfig rc;
  CHECK_THROWS(rc.resolve());
  rc.model = "transformer";
  CHECK_THROWS(rc.resolve());
}

TEST_CASE("usage errors exit nonzero") {
  CHECK(run_cli({}).code != 0);
  CHECK(run_cli({"train", "--no-such-flag", "1"}).code != 0);
  const auto missing = run_cli({"build-vocab", "--corpus", "/nonexistent/file", "--out", "/tmp/x"});
  CHECK(missing.code != 0);
  CHECK(missing.err.find("error:") != std::string::npos);
  CHECK(missing.err.find('\n') == missing.err.size() - 1);
}

TEST_CASE("gradcheck subcommand") {
  const auto r = run_cli({"gradcheck"});
  CHECK(r.code == 0);
  CHECK(r.out.find("input_weights") != std::string::npos);
  std::ostringstream sink;
  CHECK(cli::cmd_gradcheck(seqmodel::Dims{6, 3, 4, 4, seqmodel::CellKind::lstm}, 7, sink) < 1e-4);
}

TEST_CASE("pipeline end to end") {
  Workspace ws;
  REQUIRE(run_cli({"build-vocab", "--corpus", ws.path("train.txt"), "--out", ws.path("vocab.tsv")}).code == 0);
  const auto seg = run_cli({"segment", "--vocab", ws.path("vocab.tsv"), "--out", ws.path("segs.txt")});
  REQUIRE(seg.code == 0);
  const auto seg_lines = io::read_lines(ws.path("segs.txt"));
  bool split = false;
  for (const auto& l : seg_lines) split = split || l.rfind("walked\t", 0) == 0 && l.find(' ') != std::string::npos;
  CHECK(split);

  {
    std::ofstream cfg(ws.path("run.cfg"));
    cfg << "corpus = " << ws.path("train.txt") << "\n"
        << "dev = " << ws.path("dev.txt") << "\n"
        << "vocab = " << ws.path("vocab.tsv") << "\n"
        << "segmentations = " << ws.path("segs.txt") << "\n"
        << "width = 4\nhidden = 4\nepochs = 5\nbatch = 2\nbptt = 6\n";
  }
  const auto out = ws.path("run");
  const auto tr = run_cli({"train", "--config", ws.path("run.cfg"), "--out-dir", out, "--epochs", "2"});
  REQUIRE(tr.code == 0);
  const auto log = io::read_lines(out + "/train.log");
  REQUIRE(log.size() == 3);
  CHECK(log[0] == "# seed 1");
  CHECK(io::split_whitespace(log[2]).size() == 4);

  const auto ckpt = out + "/checkpoint.bin";
  REQUIRE(run_cli({"export", "--checkpoint", ckpt, "--which", "prior-expected", "--out", ws.path("pe.txt")}).code == 0);
  {
    std::ofstream words(ws.path("words.txt"));
    words << "walked\njumpsing\n";
  }
  REQUIRE(run_cli({"impute", "--checkpoint", ckpt, "--words", ws.path("words.txt"), "--out", ws.path("imp.txt")}).code == 0);
  const auto exported = varinfer::load_word_vectors(ws.path("pe.txt"));
  const auto imputed = varinfer::load_word_vectors(ws.path("imp.txt"));
  REQUIRE(imputed.words.size() == 2);
  const auto row = exported.find("walked");
  REQUIRE(row >= 0);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(imputed.vectors(0, i) == exported.vectors(static_cast<std::size_t>(row), i));
  }

  // Exported files re-serialize to the same bytes.
  varinfer::save_word_vectors(ws.path("pe2.txt"), exported);
  CHECK(io::read_lines(ws.path("pe2.txt")) == io::read_lines(ws.path("pe.txt")));

  // Two identical invocations give identical checkpoints.
  REQUIRE(run_cli({"train", "--config", ws.path("run.cfg"), "--out-dir", ws.path("run2"), "--epochs", "2"}).code == 0);
  std::ifstream a(ckpt, std::ios::binary), b(ws.path("run2/checkpoint.bin"), std::ios::binary);
  const std::string ba((std::istreambuf_iterator<char>(a)), {}), bb((std::istreambuf_iterator<char>(b)), {});
  CHECK(ba == bb);

  // Word similarity on the checkpoint versus a fixed table.
  {
    std::ofstream ds(ws.path("sim.tsv"));
    ds << "# w1\tw2\tscore\nwalk\twalked\t9\nwalk\tjumping\t2\ntalk\tplayzzz\t1\nplay\tplays\t8\n";
  }
  const auto all = run_cli({"eval", "--checkpoint", ckpt, "--task", "wordsim", "--dataset", ws.path("sim.tsv")});
  CHECK(all.code == 0);
  const auto fixed = run_cli({"eval", "--embeddings", ws.path("pe.txt"), "--task", "wordsim", "--dataset",
                              ws.path("sim.tsv"), "--mode", "all"});
  CHECK(fixed.code != 0);
  CHECK(fixed.err.find("n/a: no imputer") != std::string::npos);
  const auto inv = run_cli({"eval", "--embeddings", ws.path("pe.txt"), "--task", "wordsim", "--dataset",
                            ws.path("sim.tsv"), "--mode", "in-vocab"});
  CHECK(inv.code == 0);

  // Resume continues from the stored epoch counter.
  const auto res = run_cli({"train", "--config", ws.path("run.cfg"), "--out-dir", ws.path("run3"), "--resume", ckpt,
                            "--epochs", "3"});
  CHECK(res.code == 0);
  CHECK(io::read_lines(ws.path("run3/train.log")).size() == 2);
}
