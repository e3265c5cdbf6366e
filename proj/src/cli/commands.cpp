// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <memory>

#include "varembed/cli.hpp"
#include "varembed/error.hpp"
#include "varembed/evalsuite.hpp"
#include "varembed/io.hpp"
#include "varembed/morphprior.hpp"
#include "varembed/seqmodel/checkpoint.hpp"
#include "varembed/seqmodel/export.hpp"
#include "varembed/seqmodel/toycheck.hpp"
#include "varembed/varinfer.hpp"

namespace varembed::cli {

namespace fs = std::filesystem;
using numerics::Tensor;

void cmd_build_vocab(const std::string& corpus, std::size_t max_size, const std::string& out,
                     std::ostream& log) {
  const auto tokens = textcorpus::read_corpus(corpus);
  const auto vocab = textcorpus::Vocabulary::build(tokens, max_size);
  vocab.save(out);
  log << "vocabulary: " << vocab.size() << " entries from " << tokens.size() << " tokens\n";
}

void cmd_segment(const std::string& vocab_path, const std::string& seg_file, bool permissive,
                 const morphoseg::MdlOptions& mdl, const std::string& out, std::ostream& log) {
  const auto vocab = textcorpus::Vocabulary::load(vocab_path);
  morphoseg::SegmentationTable table;
  if (seg_file.empty()) {
    table = morphoseg::mdl_segment(vocab, mdl);
  } else {
    table = morphoseg::load_segmentations(seg_file, vocab, {permissive});
  }
  table.save(out, vocab);
  log << "segmentation: " << table.word_count() << " words, " << table.morpheme_count()
      << " morphemes\n";
}

namespace {

void write_text(const std::string& path, const std::string& text) {
  io::write_atomically(path, [&](std::ostream& o) { o << text; });
}

}  // namespace

void cmd_train(const RunConfig& config, std::ostream& log) {
  seqmodel::TrainConfig train = config.resolve();
  fs::create_directories(config.out_dir);
  const std::string ckpt_path = (fs::path(config.out_dir) / "checkpoint.bin").string();
  const std::string log_path = (fs::path(config.out_dir) / "train.log").string();

  const auto train_tokens = textcorpus::read_corpus(config.corpus);
  const auto dev_tokens = textcorpus::read_corpus(config.dev);

  std::unique_ptr<seqmodel::Checkpoint> resumed;
  textcorpus::Vocabulary vocab;
  morphoseg::SegmentationTable seg;
  if (!config.resume.empty()) {
    resumed = std::make_unique<seqmodel::Checkpoint>(seqmodel::load_checkpoint(config.resume));
    vocab = resumed->vocab;
    seg = resumed->seg;
  } else {
    vocab = config.vocab.empty() ? textcorpus::Vocabulary::build(train_tokens, config.max_vocab)
                                 : textcorpus::Vocabulary::load(config.vocab);
    seg = config.segmentations.empty()
              ? morphoseg::mdl_segment(vocab)
              : morphoseg::load_segmentations(config.segmentations, vocab, {config.permissive});
  }
  const auto train_stream = textcorpus::encode(train_tokens, vocab);
  const auto dev_stream = textcorpus::encode(dev_tokens, vocab);

  std::unique_ptr<seqmodel::Trainer> trainer;
  if (resumed) {
    if (resumed->config.kind != train.kind || resumed->config.cell != train.cell ||
        resumed->config.width != train.width || resumed->config.hidden != train.hidden) {
      throw ShapeError("resume checkpoint has a different model kind, cell, k or h");
    }
    trainer = std::make_unique<seqmodel::Trainer>(train, seg, std::move(resumed->model),
                                                  std::move(resumed->accumulators),
                                                  resumed->schedule, resumed->epochs_done);
  } else {
    trainer = std::make_unique<seqmodel::Trainer>(train, seg);
    if (!config.init_vectors.empty()) {
      auto& v = std::get<seqmodel::VariationalEmbeddings>(trainer->model().embeddings);
      const auto ext = varinfer::load_word_vectors(config.init_vectors);
      if (ext.width() != train.width) throw ShapeError("init-vectors width differs from k");
      const auto covered = varinfer::warm_start(v.state, vocab, ext);
      log << "warm start: " << covered << " of " << vocab.size() << " words\n";
    }
  }
  log << "# seed " << train.seed << '\n'
      << "model " << seqmodel::to_string(train.kind) << ", cell " << seqmodel::to_string(train.cell)
      << ", vocabulary " << vocab.size() << ", morphemes " << seg.morpheme_count()
      << ", train tokens " << train_stream.size() << ", dev tokens " << dev_stream.size() << '\n';

  trainer->run(train_stream, dev_stream, [&](const seqmodel::EpochRecord& r) {
    log << r.epoch << ' ' << io::format_double(r.dev_objective) << ' '
        << io::format_double(r.learning_rate) << ' ' << io::format_double(r.wallclock)
        << (r.halved ? " (halved)" : "") << '\n';
    seqmodel::save_checkpoint(ckpt_path, seqmodel::make_checkpoint(*trainer, vocab));
    write_text(log_path, seqmodel::format_training_log(trainer->log(), train.seed));
  });
  if (trainer->log().empty()) {
    seqmodel::save_checkpoint(ckpt_path, seqmodel::make_checkpoint(*trainer, vocab));
  }
  log << "checkpoint: " << ckpt_path << '\n';
}

void cmd_export(const std::string& checkpoint, const std::string& which, const std::string& out,
                std::ostream& log) {
  const auto ckpt = seqmodel::load_checkpoint(checkpoint);
  if (which == "morpheme-table") {
    const Tensor& table =
        ckpt.model.is_variational()
            ? std::get<seqmodel::VariationalEmbeddings>(ckpt.model.embeddings).prior.u
            : std::get<seqmodel::AdditiveEmbeddings>(ckpt.model.embeddings).morphemes;
    morphprior::save_morpheme_embeddings(out, ckpt.seg, table);
    log << "exported " << table.rows() << " morpheme vectors\n";
    return;
  }
  const auto vectors = seqmodel::export_vectors(ckpt, seqmodel::parse_export_kind(which));
  varinfer::save_word_vectors(out, vectors);
  log << "exported " << vectors.words.size() << " vectors (" << which << ")\n";
}

void cmd_impute(const std::string& checkpoint, const std::string& words, const std::string& which,
                const std::string& out, std::ostream& log) {
  auto ckpt = std::make_shared<const seqmodel::Checkpoint>(seqmodel::load_checkpoint(checkpoint));
  std::string kind = which;
  if (kind.empty()) kind = ckpt->model.is_variational() ? "prior-expected" : "morphemes";
  const auto impute = seqmodel::make_imputer(ckpt, seqmodel::parse_export_kind(kind));
  varinfer::WordVectors result;
  std::vector<std::vector<double>> rows;
  for (const auto& line : io::read_lines(words)) {
    for (const auto& w : io::split_whitespace(line)) {
      result.words.push_back(w);
      rows.push_back(impute(w));
    }
  }
  if (rows.empty()) throw InputError("word list '" + words + "' is empty");
  result.vectors = Tensor(rows.size(), ckpt->model.width());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].begin(), rows[i].end(), result.vectors.row(i).begin());
  }
  result.reindex();
  varinfer::save_word_vectors(out, result);
  log << "imputed " << rows.size() << " vectors (" << kind << ")\n";
}

namespace {

evalsuite::EmbeddingTable load_table(const EvalRequest& r) {
  if (r.checkpoint.empty() == r.embeddings.empty()) {
    throw InputError("give exactly one of --checkpoint or --embeddings");
  }
  evalsuite::EmbeddingTable table;
  if (!r.embeddings.empty()) {
    if (!r.which.empty()) throw InputError("--which applies only to checkpoints");
    table.vectors = varinfer::load_word_vectors(r.embeddings);
    table.description = r.embeddings;
    return table;
  }
  auto ckpt = std::make_shared<const seqmodel::Checkpoint>(seqmodel::load_checkpoint(r.checkpoint));
  std::string which = r.which;
  if (which.empty()) which = ckpt->model.is_variational() ? "logits" : "additive";
  const auto kind = seqmodel::parse_export_kind(which);
  table.vectors = seqmodel::export_vectors(*ckpt, kind);
  table.imputer = seqmodel::make_imputer(ckpt, kind);
  table.description = r.checkpoint + " (" + which + ")";
  return table;
}

}  // namespace

void cmd_eval(const EvalRequest& r, std::ostream& report) {
  if (r.task != "wordsim" && r.task != "qvec" && r.task != "pos") {
    throw InputError("unknown task '" + r.task + "' (wordsim, qvec or pos)");
  }
  const auto mode = evalsuite::parse_wordsim_mode(r.mode);
  const auto table = load_table(r);
  if (r.task == "wordsim") {
    if (r.datasets.empty()) throw InputError("wordsim needs at least one --dataset");
    for (const auto& path : r.datasets) {
      const auto data = evalsuite::load_similarity(path);
      const auto res = evalsuite::eval_wordsim(data, table, mode);
      report << "wordsim " << path << " mode=" << r.mode << " rho=" << io::format_double(res.rho)
             << " pairs=" << res.pairs_used << " skipped=" << res.pairs_skipped << '\n';
    }
  } else if (r.task == "qvec") {
    if (r.datasets.empty()) throw InputError("qvec needs at least one --dataset");
    for (const auto& path : r.datasets) {
      const auto res = evalsuite::qvec(table.vectors, evalsuite::load_qvec_oracle(path));
      report << "qvec " << path << " score=" << io::format_double(res.score)
             << " shared=" << res.shared_words << '\n';
    }
  } else {
    if (r.train_tagged.empty() || r.test_tagged.empty()) {
      throw InputError("pos needs --train-tagged and --test-tagged");
    }
    const auto train = evalsuite::load_tagged(r.train_tagged);
    const auto test = evalsuite::load_tagged(r.test_tagged, train.tagset);
    if (test.tagset.size() != train.tagset.size()) {
      throw InputError("test corpus uses tags absent from the training corpus");
    }
    evalsuite::TaggerConfig cfg;
    cfg.hidden = r.tagger_hidden;
    cfg.epochs = r.tagger_epochs;
    cfg.seed = r.seed;
    auto tagger = evalsuite::tagger_train(train, table, cfg);
    const auto res = evalsuite::tagger_accuracy(tagger, test, table, evalsuite::word_frequencies(train));
    report << "pos accuracy=" << io::format_double(res.accuracy) << " tokens=" << res.total << '\n';
    for (const auto& b : res.buckets) {
      report << "pos bucket " << b.lo << '-' << b.hi << " tokens=" << b.tokens
             << " error=" << io::format_double(b.error_rate()) << '\n';
    }
  }
}

double cmd_gradcheck(const seqmodel::Dims& dims, std::uint64_t seed, std::ostream& out) {
  double worst = 0.0;
  struct Case {
    seqmodel::ModelKind kind;
    seqmodel::CellKind cell;
  };
  for (const Case c : {Case{seqmodel::ModelKind::varembed, seqmodel::CellKind::rnn},
                       Case{seqmodel::ModelKind::varembed, seqmodel::CellKind::lstm},
                       Case{seqmodel::ModelKind::additive, seqmodel::CellKind::lstm}}) {
    seqmodel::ToyProblem toy;
    toy.dims = dims;
    toy.dims.cell = c.cell;
    toy.seed = seed;
    const auto report = seqmodel::check_window_gradients(c.kind, toy);
    for (const auto& e : report.entries) {
      out << seqmodel::to_string(c.kind) << '/' << seqmodel::to_string(c.cell) << ' ' << e.name
          << " max_rel_err=" << io::format_double(e.max_relative_error)
          << " coords=" << e.coords_checked << '\n';
      worst = std::max(worst, e.max_relative_error);
    }
  }
  out << "max_rel_err=" << io::format_double(worst) << '\n';
  return worst;
}

namespace {

// Fills options of `cmd` that no flag set from the --config file.
void apply_config(CLI::App& cmd, const std::string& path) {
  if (path.empty()) return;
  for (const auto& [key, value] : load_config(path)) {
    if (key == "config") throw InputError(path + ": 'config' cannot be set from a config file");
    CLI::Option* opt = cmd.get_option_no_throw("--" + key);
    if (!opt) throw InputError(path + ": unknown setting '" + key + "'");
    if (opt->count() == 0) {
      opt->add_result(value);
      opt->run_callback();
    }
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Latent Bernoulli word embeddings with morphological priors"};
  app.require_subcommand(1);

  std::string corpus, out_path, vocab_path, seg_path, checkpoint, which, words;
  std::size_t max_size = 50000;
  bool permissive = false;
  auto* build = app.add_subcommand("build-vocab", "Build a frequency-capped vocabulary");
  build->add_option("--corpus", corpus, "Tokenized corpus, one sentence per line")->required();
  build->add_option("--max-size", max_size, "Number of word types kept");
  build->add_option("--out", out_path, "Output vocabulary file")->required();

  morphoseg::MdlOptions mdl;
  auto* segment = app.add_subcommand("segment", "Segment the vocabulary, or validate a file");
  segment->add_option("--vocab", vocab_path)->required();
  segment->add_option("--segmentations", seg_path, "Existing word<TAB>morphs file");
  segment->add_flag("--permissive", permissive, "Allow pieces that do not spell the word");
  segment->add_option("--passes", mdl.max_passes, "MDL passes");
  segment->add_option("--seed", mdl.seed);
  std::string dampening = "ones";
  segment->add_option("--dampening", dampening, "Count dampening: none, log or ones");
  segment->add_option("--out", out_path)->required();

  RunConfig rc;
  std::string config_path;
  auto* train = app.add_subcommand("train", "Train a model and write checkpoint.bin + train.log");
  train->add_option("--config", config_path, "key = value settings file (flags take precedence)");
  train->add_option("--corpus", rc.corpus);
  train->add_option("--dev", rc.dev);
  train->add_option("--vocab", rc.vocab);
  train->add_option("--segmentations", rc.segmentations);
  train->add_flag("--permissive", rc.permissive);
  train->add_option("--out-dir", rc.out_dir);
  train->add_option("--init-vectors", rc.init_vectors);
  train->add_option("--resume", rc.resume);
  train->add_option("--max-vocab", rc.max_vocab);
  train->add_option("--model", rc.model, "varembed or additive");
  train->add_option("--cell", rc.cell, "lstm or rnn");
  train->add_option("--width", rc.train.width, "Embedding width k");
  train->add_option("--hidden", rc.train.hidden, "Hidden size h");
  train->add_option("--epochs", rc.train.epochs);
  train->add_option("--lr", rc.train.learning_rate);
  train->add_option("--lr-decay", rc.train.lr_decay);
  train->add_option("--clip", rc.train.clip);
  train->add_option("--plateau-threshold", rc.train.plateau_threshold);
  train->add_option("--init-scale", rc.train.init_scale);
  train->add_option("--batch", rc.train.plan.batch_size);
  train->add_option("--bptt", rc.train.plan.bptt_length);
  train->add_option("--dev-batch", rc.train.dev_plan.batch_size);
  train->add_option("--seed", rc.train.seed);

  auto* exp = app.add_subcommand("export", "Write embeddings from a checkpoint");
  exp->add_option("--checkpoint", checkpoint)->required();
  exp->add_option("--which", which, "logits, prior-expected, additive, morphemes or morpheme-table")
      ->required();
  exp->add_option("--out", out_path)->required();

  auto* imp = app.add_subcommand("impute", "Prior imputation for arbitrary surface forms");
  imp->add_option("--checkpoint", checkpoint)->required();
  imp->add_option("--words", words, "Whitespace-separated word list")->required();
  imp->add_option("--which", which, "Vector space (default: prior-expected or morphemes)");
  imp->add_option("--out", out_path)->required();

  EvalRequest ev;
  auto* eval = app.add_subcommand("eval", "Evaluate embeddings");
  eval->add_option("--checkpoint", ev.checkpoint);
  eval->add_option("--embeddings", ev.embeddings, "Fixed word-vector file");
  eval->add_option("--which", ev.which);
  eval->add_option("--task", ev.task, "wordsim, qvec or pos")->required();
  eval->add_option("--dataset", ev.datasets, "Similarity or oracle file (repeatable)");
  eval->add_option("--mode", ev.mode, "all or in-vocab");
  eval->add_option("--train-tagged", ev.train_tagged);
  eval->add_option("--test-tagged", ev.test_tagged);
  eval->add_option("--tagger-hidden", ev.tagger_hidden);
  eval->add_option("--tagger-epochs", ev.tagger_epochs);
  eval->add_option("--seed", ev.seed);

  seqmodel::Dims toy{6, 3, 4, 4, seqmodel::CellKind::lstm};
  std::uint64_t gc_seed = 7;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of every gradient");
  gc->add_option("--vocabulary", toy.vocabulary);
  gc->add_option("--morphemes", toy.morphemes);
  gc->add_option("--width", toy.width);
  gc->add_option("--hidden", toy.hidden);
  gc->add_option("--seed", gc_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  try {
    if (build->parsed()) {
      cmd_build_vocab(corpus, max_size, out_path, out);
    } else if (segment->parsed()) {
      mdl.dampening = morphoseg::parse_dampening(dampening);
      cmd_segment(vocab_path, seg_path, permissive, mdl, out_path, out);
    } else if (train->parsed()) {
      apply_config(*train, config_path);
      cmd_train(rc, out);
    } else if (exp->parsed()) {
      cmd_export(checkpoint, which, out_path, out);
    } else if (imp->parsed()) {
      cmd_impute(checkpoint, words, which, out_path, out);
    } else if (eval->parsed()) {
      cmd_eval(ev, out);
    } else if (gc->parsed()) {
      if (cmd_gradcheck(toy, gc_seed, out) >= 1e-4) {
        err << "error: gradient check exceeded 1e-4\n";
        return 1;
      }
    }
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace varembed::cli
