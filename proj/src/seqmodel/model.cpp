// SPDX-License-Identifier: Apache-2.0
#include "varembed/seqmodel/model.hpp"

#include <algorithm>
#include <cmath>

#include "varembed/error.hpp"

namespace varembed::seqmodel {

using numerics::Graph;
using Var = numerics::Graph::Var;

const char* to_string(CellKind kind) { return kind == CellKind::lstm ? "lstm" : "rnn"; }
const char* to_string(ModelKind kind) {
  return kind == ModelKind::varembed ? "varembed" : "additive";
}

CellKind parse_cell_kind(std::string_view s) {
  if (s == "lstm") return CellKind::lstm;
  if (s == "rnn") return CellKind::rnn;
  throw InputError("unknown cell kind '" + std::string(s) + "' (expected lstm or rnn)");
}

ModelKind parse_model_kind(std::string_view s) {
  if (s == "varembed") return ModelKind::varembed;
  if (s == "additive") return ModelKind::additive;
  throw InputError("unknown model kind '" + std::string(s) + "' (expected varembed or additive)");
}

Recurrence Recurrence::random(CellKind kind, std::size_t input_width, std::size_t hidden,
                              numerics::Rng& rng, double scale) {
  Recurrence r;
  r.kind = kind;
  const std::size_t g = r.gates() * hidden;
  r.input_weights = Tensor(input_width, g);
  r.recurrent_weights = Tensor(hidden, g);
  r.bias = Tensor(1, g);
  numerics::fill_uniform(r.input_weights, rng, -scale, scale);
  numerics::fill_uniform(r.recurrent_weights, rng, -scale, scale);
  return r;
}

CellState CellState::zeros(const Recurrence& cell, std::size_t batch) {
  CellState s;
  s.hidden = Tensor(batch, cell.hidden());
  if (cell.kind == CellKind::lstm) s.memory = Tensor(batch, cell.hidden());
  return s;
}

namespace {

// Pre-activations x·W + h·U + b for a single example.
std::vector<double> preactivation(std::span<const double> x, std::span<const double> h,
                                  const Recurrence& cell) {
  if (x.size() != cell.input_width() || h.size() != cell.hidden()) {
    throw ShapeError("recurrence step: input or state width mismatch");
  }
  const std::size_t g = cell.bias.cols();
  std::vector<double> pre(cell.bias.data().begin(), cell.bias.data().end());
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < g; ++j) pre[j] += x[i] * cell.input_weights(i, j);
  for (std::size_t i = 0; i < h.size(); ++i)
    for (std::size_t j = 0; j < g; ++j) pre[j] += h[i] * cell.recurrent_weights(i, j);
  return pre;
}

}  // namespace

std::vector<double> rnn_step(std::span<const double> embedding, std::span<const double> h_prev,
                             const Recurrence& cell) {
  if (cell.kind != CellKind::rnn) throw InputError("rnn_step needs an RNN recurrence");
  auto pre = preactivation(embedding, h_prev, cell);
  for (double& v : pre) v = numerics::sigmoid(v);
  return pre;
}

LstmState lstm_step(std::span<const double> embedding, const LstmState& prev,
                    const Recurrence& cell) {
  if (cell.kind != CellKind::lstm) throw InputError("lstm_step needs an LSTM recurrence");
  if (prev.c.size() != cell.hidden()) throw ShapeError("lstm_step: memory width mismatch");
  const auto pre = preactivation(embedding, prev.h, cell);
  const std::size_t h = cell.hidden();
  LstmState next{std::vector<double>(h), std::vector<double>(h)};
  for (std::size_t j = 0; j < h; ++j) {
    const double in = numerics::sigmoid(pre[j]);
    const double forget = numerics::sigmoid(pre[h + j]);
    const double out = numerics::sigmoid(pre[2 * h + j]);
    const double cand = std::tanh(pre[3 * h + j]);
    next.c[j] = forget * prev.c[j] + in * cand;
    next.h[j] = out * std::tanh(next.c[j]);
  }
  return next;
}

std::vector<double> compose_morphemes(std::span<const morphoseg::MorphId> morphs,
                                      const AdditiveEmbeddings& emb) {
  std::vector<double> v(emb.morphemes.cols(), 0.0);
  for (auto m : morphs) {
    if (m >= emb.morphemes.rows()) throw ShapeError("morpheme id out of range");
    const auto row = emb.morphemes.row(m);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += row[i];
  }
  return v;
}

std::vector<double> compose_additive(textcorpus::WordId word, const AdditiveEmbeddings& emb,
                                     const morphoseg::SegmentationTable& seg) {
  if (word >= emb.words.rows()) throw InputError("word id out of range for additive embeddings");
  auto v = compose_morphemes(seg.segmentation(word), emb);
  const auto row = emb.words.row(word);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += row[i];
  return v;
}

ModelKind Model::kind() const {
  if (std::holds_alternative<VariationalEmbeddings>(embeddings)) return ModelKind::varembed;
  if (std::holds_alternative<AdditiveEmbeddings>(embeddings)) return ModelKind::additive;
  throw InputError("fixed-embedding models have no trainable model kind");
}

Model init_model(ModelKind kind, const Dims& dims, numerics::Rng& rng, double scale) {
  if (dims.vocabulary == 0 || dims.morphemes == 0 || dims.width == 0 || dims.hidden == 0) {
    throw InputError("model dimensions must be positive");
  }
  Model m;
  if (kind == ModelKind::varembed) {
    VariationalEmbeddings v;
    v.state = varinfer::VariationalState::random(dims.vocabulary, dims.width, rng, scale);
    v.prior = morphprior::MorphemeEmbeddings::random(dims.morphemes, dims.width, rng, scale);
    m.embeddings = std::move(v);
  } else {
    AdditiveEmbeddings a{Tensor(dims.vocabulary, dims.width), Tensor(dims.morphemes, dims.width)};
    numerics::fill_uniform(a.words, rng, -scale, scale);
    numerics::fill_uniform(a.morphemes, rng, -scale, scale);
    m.embeddings = std::move(a);
  }
  m.lm.cell = Recurrence::random(dims.cell, dims.width, dims.hidden, rng, scale);
  m.lm.output = Tensor(dims.vocabulary, dims.hidden);
  numerics::fill_uniform(m.lm.output, rng, -scale, scale);
  return m;
}

numerics::ParameterSet bind_parameters(Model& model) {
  numerics::ParameterSet ps;
  if (auto* v = std::get_if<VariationalEmbeddings>(&model.embeddings)) {
    ps.add("gamma_logits", v->state.logits);
    ps.add("morphemes", v->prior.u);
  } else if (auto* a = std::get_if<AdditiveEmbeddings>(&model.embeddings)) {
    ps.add("word_vectors", a->words);
    ps.add("morphemes", a->morphemes);
  }
  ps.add("input_weights", model.lm.cell.input_weights);
  ps.add("recurrent_weights", model.lm.cell.recurrent_weights);
  ps.add("bias", model.lm.cell.bias);
  ps.add("output", model.lm.output);
  return ps;
}

std::uint64_t count_parameters(ModelKind kind, const Dims& dims) {
  // Both kinds carry one k-vector per word (γ logits or word vectors) and one
  // per morpheme (prior embeddings u or additive morpheme vectors).
  (void)kind;
  const std::uint64_t k = dims.width;
  const std::uint64_t h = dims.hidden;
  const std::uint64_t g = dims.cell == CellKind::lstm ? 4 : 1;
  const std::uint64_t inputs = k * dims.vocabulary + k * dims.morphemes;
  const std::uint64_t output = h * dims.vocabulary;
  const std::uint64_t recurrence = g * h * (k + h) + g * h;
  return inputs + output + recurrence;
}

namespace {

struct BoundVars {
  Var words;      // γ logits, additive word vectors, or fixed table
  Var morphemes;  // prior u or additive morpheme vectors
  bool has_morphemes = false;
  Var input_weights, recurrent_weights, bias, output;
};

BoundVars bind(Graph& g, const Model& m, numerics::ParameterSet* params) {
  auto ref = [&](const char* name, const Tensor& t) {
    return params ? g.param(params->get(name)) : g.constant_ref(t);
  };
  BoundVars b;
  if (const auto* v = std::get_if<VariationalEmbeddings>(&m.embeddings)) {
    b.words = ref("gamma_logits", v->state.logits);
    b.morphemes = ref("morphemes", v->prior.u);
    b.has_morphemes = true;
  } else if (const auto* a = std::get_if<AdditiveEmbeddings>(&m.embeddings)) {
    b.words = ref("word_vectors", a->words);
    b.morphemes = ref("morphemes", a->morphemes);
    b.has_morphemes = true;
  } else {
    b.words = g.constant_ref(std::get<FixedEmbeddings>(m.embeddings).table);
  }
  b.input_weights = ref("input_weights", m.lm.cell.input_weights);
  b.recurrent_weights = ref("recurrent_weights", m.lm.cell.recurrent_weights);
  b.bias = ref("bias", m.lm.cell.bias);
  b.output = ref("output", m.lm.output);
  return b;
}

struct Unrolled {
  Var hidden_seq;                    // (length·batch) × h, time-major rows
  std::vector<std::size_t> targets;  // time-major
  Var final_hidden, final_memory;
  bool has_memory = false;
};

void check_window(const Model& m, const textcorpus::Window& w, const CellState& init) {
  if (w.length == 0 || w.batch_size == 0) throw InputError("empty window");
  if (init.hidden.rows() != w.batch_size || init.hidden.cols() != m.hidden()) {
    throw ShapeError("initial state does not match batch × hidden");
  }
  if (m.lm.cell.kind == CellKind::lstm &&
      (init.memory.rows() != w.batch_size || init.memory.cols() != m.hidden())) {
    throw ShapeError("initial LSTM memory does not match batch × hidden");
  }
}

Unrolled unroll(Graph& g, const Model& m, const BoundVars& vars,
                const morphoseg::SegmentationTable& seg, const textcorpus::Window& w,
                const CellState& init) {
  check_window(m, w, init);
  const std::size_t B = w.batch_size;
  const std::size_t T = w.length;
  const std::size_t h = m.hidden();

  Unrolled u;
  std::vector<std::size_t> ids(T * B);
  u.targets.resize(T * B);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t b = 0; b < B; ++b) {
      ids[t * B + b] = w.input(b, t);
      u.targets[t * B + b] = w.target(b, t);
    }

  Var x;
  if (m.is_variational()) {
    // Local expectation: the recurrence consumes E_q[b] = σ(logits).
    x = g.sigmoid(g.gather_rows(vars.words, ids));
  } else if (std::holds_alternative<AdditiveEmbeddings>(m.embeddings)) {
    numerics::RaggedIndex morphs;
    for (std::size_t id : ids) {
      const auto& seg_ids = seg.segmentation(static_cast<textcorpus::WordId>(id));
      std::vector<std::size_t> flat(seg_ids.begin(), seg_ids.end());
      morphs.push_group(flat);
    }
    x = g.add(g.gather_rows(vars.words, ids), g.gather_sum(vars.morphemes, morphs));
  } else {
    x = g.gather_rows(vars.words, ids);
  }
  const Var xw = g.matmul(x, vars.input_weights);

  Var hid = g.input(init.hidden);
  Var mem{};
  const bool lstm = m.lm.cell.kind == CellKind::lstm;
  if (lstm) mem = g.input(init.memory);
  std::vector<Var> states;
  states.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    const Var pre = g.add_row(g.add(g.rows(xw, t * B, B), g.matmul(hid, vars.recurrent_weights)),
                              vars.bias);
    if (!lstm) {
      hid = g.sigmoid(pre);
    } else {
      const Var in = g.sigmoid(g.columns(pre, 0, h));
      const Var forget = g.sigmoid(g.columns(pre, h, h));
      const Var out = g.sigmoid(g.columns(pre, 2 * h, h));
      const Var cand = g.tanh(g.columns(pre, 3 * h, h));
      mem = g.add(g.mul(forget, mem), g.mul(in, cand));
      hid = g.mul(out, g.tanh(mem));
    }
    states.push_back(hid);
  }
  u.hidden_seq = g.concat_rows(states);
  u.final_hidden = hid;
  u.final_memory = mem;
  u.has_memory = lstm;
  return u;
}

CellState extract_state(const Graph& g, const Unrolled& u) {
  CellState s;
  s.hidden = g.value(u.final_hidden);
  if (u.has_memory) s.memory = g.value(u.final_memory);
  return s;
}

}  // namespace

WindowTerms window_objective(Model& model, const morphoseg::SegmentationTable& seg,
                             const textcorpus::Window& window, const CellState& initial,
                             double kl_scale, numerics::ParameterSet* params) {
  Graph g(params != nullptr);
  const BoundVars vars = bind(g, model, params);
  const Unrolled u = unroll(g, model, vars, seg, window, initial);
  const Var nll = g.projected_softmax_nll(u.hidden_seq, vars.output, u.targets);

  WindowTerms terms;
  terms.nll = g.value(nll).item();
  terms.kl_scale = 0.0;
  Var loss = nll;
  if (model.is_variational()) {
    if (seg.word_count() != model.vocabulary()) {
      throw ShapeError("segmentation table does not cover the model vocabulary");
    }
    const Var prior = g.gather_sum(vars.morphemes, seg.ragged());
    const Var kl = g.bernoulli_kl(vars.words, prior);
    terms.kl = g.value(kl).item();
    terms.kl_scale = kl_scale;
    loss = g.add(nll, g.scale(kl, kl_scale));
  }
  terms.final_state = extract_state(g, u);
  if (params) g.backward(loss);
  return terms;
}

WindowOutput forward_window(const Model& model, const morphoseg::SegmentationTable& seg,
                            const textcorpus::Window& window, const CellState& initial,
                            bool full_distribution) {
  Graph g(false);
  const BoundVars vars = bind(g, model, nullptr);
  const Unrolled u = unroll(g, model, vars, seg, window, initial);
  const Tensor& hs = g.value(u.hidden_seq);
  const Tensor& out = model.lm.output;
  const std::size_t B = window.batch_size;
  const std::size_t T = window.length;
  const std::size_t V = out.rows();

  WindowOutput result;
  result.target_log_probs.resize(B * T);
  if (full_distribution) result.log_probs = Tensor(B * T, V);
  std::vector<double> logits(V);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t row = t * B + b;
      const auto hr = hs.row(row);
      double mx = -INFINITY;
      for (std::size_t j = 0; j < V; ++j) {
        const auto wj = out.row(j);
        double acc = 0.0;
        for (std::size_t c = 0; c < hr.size(); ++c) acc += hr[c] * wj[c];
        logits[j] = acc;
        mx = std::max(mx, acc);
      }
      double z = 0.0;
      for (double l : logits) z += std::exp(l - mx);
      const double lse = mx + std::log(z);
      const std::size_t dst = b * T + t;
      result.target_log_probs[dst] = logits[u.targets[row]] - lse;
      if (full_distribution)
        for (std::size_t j = 0; j < V; ++j) result.log_probs(dst, j) = logits[j] - lse;
    }
  }
  result.final_state = extract_state(g, u);
  return result;
}

double CorpusScore::perplexity() const {
  return tokens == 0 ? 1.0 : std::exp(nll / static_cast<double>(tokens));
}

CorpusScore corpus_nll(const textcorpus::TokenStream& stream, const Model& model,
                       const morphoseg::SegmentationTable& seg, const textcorpus::BatchPlan& plan) {
  CorpusScore score;
  CellState state = CellState::zeros(model.lm.cell, plan.batch_size);
  for (const auto& w : textcorpus::iterate_batches(stream, plan)) {
    auto out = forward_window(model, seg, w, state);
    for (double lp : out.target_log_probs) score.nll -= lp;
    score.tokens += w.tokens();
    state = std::move(out.final_state);
  }
  return score;
}

ElboTerms elbo(const textcorpus::TokenStream& stream, const Model& model,
               const morphoseg::SegmentationTable& seg, const textcorpus::BatchPlan& plan,
               double kl_scale) {
  if (!(kl_scale > 0.0 && kl_scale <= 1.0)) throw InputError("kl_scale must lie in (0, 1]");
  const CorpusScore s = corpus_nll(stream, model, seg, plan);
  ElboTerms e;
  e.log_likelihood = -s.nll;
  e.tokens = s.tokens;
  e.kl_scale = kl_scale;
  if (const auto* v = std::get_if<VariationalEmbeddings>(&model.embeddings)) {
    e.kl = varinfer::kl_total(v->state, seg, v->prior);
  }
  return e;
}

}  // namespace varembed::seqmodel
