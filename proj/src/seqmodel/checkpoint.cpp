// SPDX-License-Identifier: Apache-2.0
#include "varembed/seqmodel/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "varembed/error.hpp"
#include "varembed/io.hpp"

namespace varembed::seqmodel {

namespace {

constexpr char kMagic[8] = {'V', 'E', 'M', 'B', 'C', 'K', 'P', 'T'};
constexpr std::uint8_t kTextSection = 0;
constexpr std::uint8_t kTensorSection = 1;

template <typename T>
void put(std::string& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

class Reader {
 public:
  Reader(const std::string& bytes, std::string source) : bytes_(bytes), source_(std::move(source)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
        std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    }
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }

  std::string get_string(std::uint64_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }
  [[noreturn]] void fail(const std::string& what) const {
    throw InputError(source_ + ": " + what + " (byte " + std::to_string(pos_) + ")");
  }

 private:
  void need(std::uint64_t n) const {
    if (n > bytes_.size() - pos_) fail("truncated checkpoint");
  }
  const std::string& bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

void put_header(std::string& out, const std::string& name, std::uint8_t kind) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out += name;
  put<std::uint8_t>(out, kind);
}

void put_text(std::string& out, const std::string& name, const std::string& text) {
  put_header(out, name, kTextSection);
  put<std::uint64_t>(out, text.size());
  out += text;
}

void put_tensor(std::string& out, const std::string& name, const Tensor& t) {
  put_header(out, name, kTensorSection);
  put<std::uint64_t>(out, t.rows());
  put<std::uint64_t>(out, t.cols());
  for (double v : t.data()) put<double>(out, v);
}

struct Sections {
  std::map<std::string, std::string> text;
  std::map<std::string, Tensor> tensors;
};

std::string meta_text(const Checkpoint& c) {
  const auto& cfg = c.config;
  std::ostringstream m;
  m << "model=" << to_string(cfg.kind) << '\n'
    << "cell=" << to_string(cfg.cell) << '\n'
    << "k=" << cfg.width << '\n'
    << "h=" << cfg.hidden << '\n'
    << "vocabulary=" << c.vocab.size() << '\n'
    << "morphemes=" << c.seg.morpheme_count() << '\n'
    << "epochs=" << cfg.epochs << '\n'
    << "lr=" << io::format_double(cfg.learning_rate) << '\n'
    << "lr_decay=" << io::format_double(cfg.lr_decay) << '\n'
    << "clip=" << io::format_double(cfg.clip) << '\n'
    << "plateau_threshold=" << io::format_double(cfg.plateau_threshold) << '\n'
    << "init_scale=" << io::format_double(cfg.init_scale) << '\n'
    << "batch=" << cfg.plan.batch_size << '\n'
    << "bptt=" << cfg.plan.bptt_length << '\n'
    << "drop_remainder=" << (cfg.plan.drop_remainder ? 1 : 0) << '\n'
    << "dev_batch=" << cfg.dev_plan.batch_size << '\n'
    << "dev_bptt=" << cfg.dev_plan.bptt_length << '\n'
    << "seed=" << cfg.seed << '\n'
    << "epochs_done=" << c.epochs_done << '\n'
    << "current_lr=" << io::format_double(c.schedule.learning_rate) << '\n'
    << "best_dev=" << io::format_double(c.schedule.best_dev) << '\n'
    << "has_best=" << (c.schedule.has_best ? 1 : 0) << '\n';
  return m.str();
}

std::string vocab_text(const textcorpus::Vocabulary& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    s += v.words()[i];
    s += '\t';
    s += std::to_string(v.counts()[i]);
    s += '\n';
  }
  return s;
}

std::string seg_text(const morphoseg::SegmentationTable& seg) {
  std::string s;
  for (std::size_t w = 0; w < seg.word_count(); ++w) {
    const auto& ids = seg.segmentation(static_cast<textcorpus::WordId>(w));
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i) s += ' ';
      s += seg.morpheme(ids[i]);
    }
    s += '\n';
  }
  return s;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t end = text.find('\n', start);
    const std::size_t stop = end == std::string::npos ? text.size() : end;
    lines.push_back(text.substr(start, stop - start));
    start = stop + 1;
  }
  return lines;
}

}  // namespace

Checkpoint make_checkpoint(const Trainer& trainer, const textcorpus::Vocabulary& vocab) {
  if (vocab.size() != trainer.model().vocabulary()) {
    throw ShapeError("vocabulary size does not match the model");
  }
  Checkpoint c;
  c.config = trainer.config();
  c.model = trainer.model();
  c.vocab = vocab;
  c.seg = trainer.segmentation();
  c.accumulators = trainer.optimizer().accumulators();
  c.schedule = trainer.schedule();
  c.epochs_done = trainer.epochs_done();
  return c;
}

std::string serialize_checkpoint(const Checkpoint& c) {
  if (c.model.vocabulary() != c.vocab.size() || c.seg.word_count() != c.vocab.size()) {
    throw ShapeError("checkpoint parts disagree on the vocabulary size");
  }
  Model model = c.model;
  const numerics::ParameterSet params = bind_parameters(model);
  if (!c.accumulators.empty() && c.accumulators.size() != params.size()) {
    throw ShapeError("optimizer state does not match the parameter list");
  }
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  const std::size_t sections = 3 + params.size() + c.accumulators.size();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(sections));
  put_text(out, "meta", meta_text(c));
  put_text(out, "vocab", vocab_text(c.vocab));
  put_text(out, "segmentation", seg_text(c.seg));
  for (const auto& p : params.all()) put_tensor(out, "param/" + p.name, *p.value);
  for (std::size_t i = 0; i < c.accumulators.size(); ++i) {
    put_tensor(out, "rmsprop/" + params[i].name, c.accumulators[i]);
  }
  return out;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  io::write_atomically(path, [&](std::ostream& out) { out.write(bytes.data(), bytes.size()); },
                       true);
}

Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& source) {
  Reader r(bytes, source);
  if (r.get_string(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    r.fail("not a checkpoint file");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) r.fail("unsupported checkpoint version " + std::to_string(version));
  const auto count = r.get<std::uint32_t>();
  Sections s;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name = r.get_string(r.get<std::uint32_t>());
    const auto kind = r.get<std::uint8_t>();
    if (kind == kTextSection) {
      s.text[name] = r.get_string(r.get<std::uint64_t>());
    } else if (kind == kTensorSection) {
      const auto rows = r.get<std::uint64_t>();
      const auto cols = r.get<std::uint64_t>();
      if (cols != 0 && rows > (bytes.size() / 8) / cols) r.fail("tensor '" + name + "' too large");
      Tensor t(rows, cols);
      for (double& v : t.data()) v = r.get<double>();
      s.tensors[name] = std::move(t);
    } else {
      r.fail("unknown section kind in '" + name + "'");
    }
  }
  if (!r.done()) r.fail("trailing bytes after the last section");

  for (const char* required : {"meta", "vocab", "segmentation"}) {
    if (!s.text.count(required)) throw InputError(source + ": missing section '" + required + "'");
  }
  std::map<std::string, std::string> meta;
  for (const auto& line : lines_of(s.text["meta"])) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError(source + ": malformed meta line '" + line + "'");
    meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto field = [&](const char* key) -> const std::string& {
    auto it = meta.find(key);
    if (it == meta.end()) throw InputError(source + ": meta is missing '" + key + "'");
    return it->second;
  };
  auto size_field = [&](const char* key) {
    return static_cast<std::size_t>(io::parse_int(field(key), key));
  };

  Checkpoint c;
  auto& cfg = c.config;
  cfg.kind = parse_model_kind(field("model"));
  cfg.cell = parse_cell_kind(field("cell"));
  cfg.width = size_field("k");
  cfg.hidden = size_field("h");
  cfg.epochs = size_field("epochs");
  cfg.learning_rate = io::parse_double(field("lr"), "lr");
  cfg.lr_decay = io::parse_double(field("lr_decay"), "lr_decay");
  cfg.clip = io::parse_double(field("clip"), "clip");
  cfg.plateau_threshold = io::parse_double(field("plateau_threshold"), "plateau_threshold");
  cfg.init_scale = io::parse_double(field("init_scale"), "init_scale");
  cfg.plan.batch_size = size_field("batch");
  cfg.plan.bptt_length = size_field("bptt");
  cfg.plan.drop_remainder = size_field("drop_remainder") != 0;
  cfg.dev_plan.batch_size = size_field("dev_batch");
  cfg.dev_plan.bptt_length = size_field("dev_bptt");
  cfg.seed = static_cast<std::uint64_t>(std::stoull(field("seed")));
  c.epochs_done = size_field("epochs_done");
  c.schedule.learning_rate = io::parse_double(field("current_lr"), "current_lr");
  c.schedule.best_dev = io::parse_double(field("best_dev"), "best_dev");
  c.schedule.has_best = size_field("has_best") != 0;

  std::vector<std::pair<std::string, std::uint64_t>> entries;
  for (const auto& line : lines_of(s.text["vocab"])) {
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw InputError(source + ": malformed vocabulary entry");
    entries.emplace_back(line.substr(0, tab),
                         static_cast<std::uint64_t>(io::parse_int(line.substr(tab + 1), "count")));
  }
  c.vocab = textcorpus::Vocabulary::from_entries(entries);
  for (const auto& line : lines_of(s.text["segmentation"])) c.seg.append_word(io::split_whitespace(line));
  if (c.seg.word_count() != c.vocab.size() || c.vocab.size() != size_field("vocabulary") ||
      c.seg.morpheme_count() != size_field("morphemes")) {
    throw ShapeError(source + ": vocabulary or morpheme counts disagree with the meta section");
  }

  Dims dims{c.vocab.size(), c.seg.morpheme_count(), cfg.width, cfg.hidden, cfg.cell};
  numerics::Rng unused(0);
  c.model = init_model(cfg.kind, dims, unused, 1.0);
  numerics::ParameterSet params = bind_parameters(c.model);
  for (auto& p : params.all()) {
    auto it = s.tensors.find("param/" + p.name);
    if (it == s.tensors.end()) throw InputError(source + ": missing tensor 'param/" + p.name + "'");
    if (!it->second.same_shape(*p.value)) {
      throw ShapeError(source + ": tensor 'param/" + p.name + "' has the wrong shape");
    }
    *p.value = std::move(it->second);
  }
  bool any_state = false;
  for (const auto& p : params.all()) any_state |= s.tensors.count("rmsprop/" + p.name) > 0;
  if (any_state) {
    for (auto& p : params.all()) {
      auto it = s.tensors.find("rmsprop/" + p.name);
      if (it == s.tensors.end() || !it->second.same_shape(*p.value)) {
        throw ShapeError(source + ": optimizer state for '" + p.name + "' missing or misshapen");
      }
      c.accumulators.push_back(std::move(it->second));
    }
  }
  return c;
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str(), path);
}

}  // namespace varembed::seqmodel
