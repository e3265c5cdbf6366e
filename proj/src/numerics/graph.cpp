// SPDX-License-Identifier: Apache-2.0
#include "varembed/numerics/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "varembed/error.hpp"

namespace varembed::numerics {

void ParameterSet::add(std::string name, Tensor& value) {
  Parameter p;
  p.name = std::move(name);
  p.value = &value;
  p.grad = Tensor(value.rows(), value.cols());
  params_.push_back(std::move(p));
}

Parameter& ParameterSet::get(std::string_view name) {
  for (auto& p : params_)
    if (p.name == name) return p;
  throw InputError("no parameter named '" + std::string(name) + "'");
}

void ParameterSet::zero_grads() {
  for (auto& p : params_) {
    if (!p.grad.same_shape(*p.value)) p.grad = Tensor(p.value->rows(), p.value->cols());
    p.grad.fill(0.0);
  }
}

namespace {
std::string shape_str(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}
}  // namespace

Graph::Var Graph::push(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = track_ && requires_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Graph::Var Graph::input(Tensor value) { return push(std::move(value), false); }

Graph::Var Graph::constant_ref(const Tensor& value) {
  Var v = push(Tensor(), false);
  nodes_[v.index].external = &value;
  return v;
}

Graph::Var Graph::param(Parameter& p) {
  Var v = push(Tensor(), true);
  nodes_[v.index].external = p.value;
  if (track_) nodes_[v.index].param = &p;
  return v;
}

const Tensor& Graph::value(Var v) const {
  const Node& n = nodes_.at(v.index);
  return n.external ? *n.external : n.value;
}

const Tensor& Graph::grad(Var v) const { return nodes_.at(v.index).grad; }

Tensor& Graph::grad_of(Var v) {
  Node& n = nodes_[v.index];
  if (n.grad.size() == 0 && value(v).size() != 0) {
    const Tensor& val = value(v);
    n.grad = Tensor(val.rows(), val.cols());
  }
  return n.grad;
}

void Graph::on_backward(Var out, std::function<void()> fn) {
  if (nodes_[out.index].requires_grad) nodes_[out.index].backprop = std::move(fn);
}

Graph::Var Graph::matmul(Var a, Var b) {
  Var out = push(numerics::matmul(value(a), value(b)), needs(a) || needs(b));
  on_backward(out, [this, a, b, out] {
    const Tensor& g = nodes_[out.index].grad;
    if (needs(a)) {
      const Tensor da = numerics::matmul_nt(g, value(b));
      Tensor& ga = grad_of(a);
      for (std::size_t i = 0; i < da.size(); ++i) ga[i] += da[i];
    }
    if (needs(b)) {
      const Tensor db = numerics::matmul_tn(value(a), g);
      Tensor& gb = grad_of(b);
      for (std::size_t i = 0; i < db.size(); ++i) gb[i] += db[i];
    }
  });
  return out;
}

Graph::Var Graph::matmul_nt(Var a, Var b) {
  Var out = push(numerics::matmul_nt(value(a), value(b)), needs(a) || needs(b));
  on_backward(out, [this, a, b, out] {
    const Tensor& g = nodes_[out.index].grad;
    if (needs(a)) {
      const Tensor da = numerics::matmul(g, value(b));
      Tensor& ga = grad_of(a);
      for (std::size_t i = 0; i < da.size(); ++i) ga[i] += da[i];
    }
    if (needs(b)) {
      const Tensor db = numerics::matmul_tn(g, value(a));
      Tensor& gb = grad_of(b);
      for (std::size_t i = 0; i < db.size(); ++i) gb[i] += db[i];
    }
  });
  return out;
}

Graph::Var Graph::add(Var a, Var b) {
  Var out = push(numerics::add(value(a), value(b)), needs(a) || needs(b));
  on_backward(out, [this, a, b, out] {
    const Tensor& g = nodes_[out.index].grad;
    for (Var v : {a, b}) {
      if (!needs(v)) continue;
      Tensor& gv = grad_of(v);
      for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
    }
  });
  return out;
}

Graph::Var Graph::sub(Var a, Var b) {
  Var out = push(numerics::sub(value(a), value(b)), needs(a) || needs(b));
  on_backward(out, [this, a, b, out] {
    const Tensor& g = nodes_[out.index].grad;
    if (needs(a)) {
      Tensor& ga = grad_of(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (needs(b)) {
      Tensor& gb = grad_of(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
  return out;
}

Graph::Var Graph::mul(Var a, Var b) {
  Var out = push(numerics::mul(value(a), value(b)), needs(a) || needs(b));
  on_backward(out, [this, a, b, out] {
    const Tensor& g = nodes_[out.index].grad;
    // Gradients are accumulated one operand at a time so that mul(x, x)
    // receives both contributions.
    if (needs(a)) {
      const Tensor& vb = value(b);
      Tensor& ga = grad_of(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
    }
    if (needs(b)) {
      const Tensor& va = value(a);
      Tensor& gb = grad_of(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
    }
  });
  return out;
}

Graph::Var Graph::scale(Var a, double factor) {
  Tensor v = value(a);
  for (double& x : v.data()) x *= factor;
  Var out = push(std::move(v), needs(a));
  on_backward(out, [this, a, out, factor] {
    const Tensor& g = nodes_[out.index].grad;
    Tensor& ga = grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
  });
  return out;
}

Graph::Var Graph::add_row(Var a, Var row) {
  const Tensor& va = value(a);
  const Tensor& vr = value(row);
  if (vr.rows() != 1 || vr.cols() != va.cols()) {
    throw ShapeError("add_row: " + shape_str(va) + " + row " + shape_str(vr));
  }
  Tensor v = va;
  for (std::size_t r = 0; r < v.rows(); ++r)
    for (std::size_t c = 0; c < v.cols(); ++c) v(r, c) += vr[c];
  Var out = push(std::move(v), needs(a) || needs(row));
  on_backward(out, [this, a, row, out] {
    const Tensor& g = nodes_[out.index].grad;
    if (needs(a)) {
      Tensor& ga = grad_of(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (needs(row)) {
      Tensor& gr = grad_of(row);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gr[c] += g(r, c);
    }
  });
  return out;
}

Graph::Var Graph::sigmoid(Var a) {
  Var out = push(numerics::sigmoid(value(a)), needs(a));
  on_backward(out, [this, a, out] {
    const Node& n = nodes_[out.index];
    Tensor& ga = grad_of(a);
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      const double s = n.value[i];
      ga[i] += n.grad[i] * s * (1.0 - s);
    }
  });
  return out;
}

Graph::Var Graph::tanh(Var a) {
  Var out = push(numerics::tanh(value(a)), needs(a));
  on_backward(out, [this, a, out] {
    const Node& n = nodes_[out.index];
    Tensor& ga = grad_of(a);
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      const double t = n.value[i];
      ga[i] += n.grad[i] * (1.0 - t * t);
    }
  });
  return out;
}

Graph::Var Graph::columns(Var a, std::size_t begin, std::size_t count) {
  const Tensor& va = value(a);
  if (begin + count > va.cols()) {
    throw ShapeError("columns: [" + std::to_string(begin) + ", +" + std::to_string(count) +
                     ") out of " + shape_str(va));
  }
  Tensor v(va.rows(), count);
  for (std::size_t r = 0; r < va.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) v(r, c) = va(r, begin + c);
  Var out = push(std::move(v), needs(a));
  on_backward(out, [this, a, out, begin, count] {
    const Tensor& g = nodes_[out.index].grad;
    Tensor& ga = grad_of(a);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < count; ++c) ga(r, begin + c) += g(r, c);
  });
  return out;
}

Graph::Var Graph::rows(Var a, std::size_t begin, std::size_t count) {
  const Tensor& va = value(a);
  if (begin + count > va.rows()) {
    throw ShapeError("rows: [" + std::to_string(begin) + ", +" + std::to_string(count) +
                     ") out of " + shape_str(va));
  }
  const auto src = va.data().subspan(begin * va.cols(), count * va.cols());
  Var out = push(Tensor(count, va.cols(), std::vector<double>(src.begin(), src.end())), needs(a));
  on_backward(out, [this, a, out, begin] {
    const Tensor& g = nodes_[out.index].grad;
    Tensor& ga = grad_of(a);
    const std::size_t offset = begin * ga.cols();
    for (std::size_t i = 0; i < g.size(); ++i) ga[offset + i] += g[i];
  });
  return out;
}

Graph::Var Graph::concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t cols = value(parts[0]).cols();
  std::size_t total = 0;
  bool any = false;
  for (Var p : parts) {
    if (value(p).cols() != cols) throw ShapeError("concat_rows: column mismatch");
    total += value(p).rows();
    any = any || needs(p);
  }
  std::vector<double> data;
  data.reserve(total * cols);
  for (Var p : parts) {
    const auto d = value(p).data();
    data.insert(data.end(), d.begin(), d.end());
  }
  Var out = push(Tensor(total, cols, std::move(data)), any);
  std::vector<Var> owned(parts.begin(), parts.end());
  on_backward(out, [this, owned = std::move(owned), out] {
    const Tensor& g = nodes_[out.index].grad;
    std::size_t offset = 0;
    for (Var p : owned) {
      const std::size_t n = value(p).size();
      if (needs(p)) {
        Tensor& gp = grad_of(p);
        for (std::size_t i = 0; i < n; ++i) gp[i] += g[offset + i];
      }
      offset += n;
    }
  });
  return out;
}

Graph::Var Graph::gather_rows(Var table, std::span<const std::size_t> ids) {
  const Tensor& t = value(table);
  Tensor v(ids.size(), t.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= t.rows()) {
      throw ShapeError("gather_rows: id " + std::to_string(ids[r]) + " out of " + shape_str(t));
    }
    std::copy_n(&t(ids[r], 0), t.cols(), &v(r, 0));
  }
  Var out = push(std::move(v), needs(table));
  std::vector<std::size_t> owned(ids.begin(), ids.end());
  on_backward(out, [this, table, out, owned = std::move(owned)] {
    const Tensor& g = nodes_[out.index].grad;
    Tensor& gt = grad_of(table);
    for (std::size_t r = 0; r < owned.size(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) gt(owned[r], c) += g(r, c);
  });
  return out;
}

Graph::Var Graph::gather_sum(Var table, const RaggedIndex& groups) {
  const Tensor& t = value(table);
  Tensor v(groups.groups(), t.cols());
  for (std::size_t g = 0; g < groups.groups(); ++g) {
    for (std::size_t id : groups.group(g)) {
      if (id >= t.rows()) {
        throw ShapeError("gather_sum: id " + std::to_string(id) + " out of " + shape_str(t));
      }
      for (std::size_t c = 0; c < t.cols(); ++c) v(g, c) += t(id, c);
    }
  }
  Var out = push(std::move(v), needs(table));
  if (!needs(table)) return out;
  on_backward(out, [this, table, out, groups] {
    const Tensor& g = nodes_[out.index].grad;
    Tensor& gt = grad_of(table);
    for (std::size_t r = 0; r < groups.groups(); ++r)
      for (std::size_t id : groups.group(r))
        for (std::size_t c = 0; c < g.cols(); ++c) gt(id, c) += g(r, c);
  });
  return out;
}

Graph::Var Graph::sum(Var a) {
  Var out = push(Tensor::scalar(numerics::sum(value(a))), needs(a));
  on_backward(out, [this, a, out] {
    const double g = nodes_[out.index].grad[0];
    Tensor& ga = grad_of(a);
    for (double& x : ga.data()) x += g;
  });
  return out;
}

Graph::Var Graph::softmax_nll(Var logits, std::span<const std::size_t> targets) {
  const Tensor& z = value(logits);
  if (targets.size() != z.rows()) throw ShapeError("softmax_nll: one target per row required");
  Tensor probs = numerics::log_softmax(z);
  double loss = 0.0;
  for (std::size_t r = 0; r < z.rows(); ++r) {
    if (targets[r] >= z.cols()) throw ShapeError("softmax_nll: target out of range");
    loss -= probs(r, targets[r]);
  }
  for (double& x : probs.data()) x = std::exp(x);
  Var out = push(Tensor::scalar(loss), needs(logits));
  std::vector<std::size_t> owned(targets.begin(), targets.end());
  on_backward(out, [this, logits, out, probs = std::move(probs), owned = std::move(owned)] {
    const double g = nodes_[out.index].grad[0];
    Tensor& gz = grad_of(logits);
    for (std::size_t r = 0; r < probs.rows(); ++r) {
      for (std::size_t c = 0; c < probs.cols(); ++c) gz(r, c) += g * probs(r, c);
      gz(r, owned[r]) -= g;
    }
  });
  return out;
}

Graph::Var Graph::projected_softmax_nll(Var hidden, Var weights,
                                        std::span<const std::size_t> targets) {
  const Tensor& h = value(hidden);
  const Tensor& w = value(weights);
  if (h.cols() != w.cols()) {
    throw ShapeError("projected_softmax_nll: hidden " + shape_str(h) + " vs weights " +
                     shape_str(w));
  }
  if (targets.size() != h.rows()) {
    throw ShapeError("projected_softmax_nll: one target per row required");
  }
  const std::size_t vocab = w.rows();
  const std::size_t width = h.cols();
  std::vector<double> lse(h.rows());
  std::vector<double> logits(vocab);
  double loss = 0.0;
  for (std::size_t r = 0; r < h.rows(); ++r) {
    if (targets[r] >= vocab) throw ShapeError("projected_softmax_nll: target out of range");
    const double* hr = &h(r, 0);
    double mx = -INFINITY;
    for (std::size_t j = 0; j < vocab; ++j) {
      const double* wj = &w(j, 0);
      double acc = 0.0;
      for (std::size_t c = 0; c < width; ++c) acc += hr[c] * wj[c];
      logits[j] = acc;
      mx = std::max(mx, acc);
    }
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    lse[r] = mx + std::log(z);
    loss += lse[r] - logits[targets[r]];
  }
  Var out = push(Tensor::scalar(loss), needs(hidden) || needs(weights));
  std::vector<std::size_t> owned(targets.begin(), targets.end());
  on_backward(out, [this, hidden, weights, out, lse = std::move(lse), owned = std::move(owned)] {
    const double g = nodes_[out.index].grad[0];
    const Tensor& h = value(hidden);
    const Tensor& w = value(weights);
    const std::size_t vocab = w.rows();
    const std::size_t width = h.cols();
    Tensor* gh = needs(hidden) ? &grad_of(hidden) : nullptr;
    Tensor* gw = needs(weights) ? &grad_of(weights) : nullptr;
    for (std::size_t r = 0; r < h.rows(); ++r) {
      const double* hr = &h(r, 0);
      for (std::size_t j = 0; j < vocab; ++j) {
        const double* wj = &w(j, 0);
        double acc = 0.0;
        for (std::size_t c = 0; c < width; ++c) acc += hr[c] * wj[c];
        double d = std::exp(acc - lse[r]);
        if (j == owned[r]) d -= 1.0;
        d *= g;
        if (gh)
          for (std::size_t c = 0; c < width; ++c) (*gh)(r, c) += d * wj[c];
        if (gw)
          for (std::size_t c = 0; c < width; ++c) (*gw)(j, c) += d * hr[c];
      }
    }
  });
  return out;
}

Graph::Var Graph::bernoulli_kl(Var q_logits, Var p_logits) {
  const Tensor& q = value(q_logits);
  const Tensor& p = value(p_logits);
  if (!q.same_shape(p)) {
    throw ShapeError("bernoulli_kl: " + shape_str(q) + " vs " + shape_str(p));
  }
  // With γ = σ(q): KL = γ(q − p) − softplus(q) + softplus(p).
  double kl = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double gamma = numerics::sigmoid(q[i]);
    kl += gamma * (q[i] - p[i]) - softplus(q[i]) + softplus(p[i]);
  }
  Var out = push(Tensor::scalar(kl), needs(q_logits) || needs(p_logits));
  on_backward(out, [this, q_logits, p_logits, out] {
    const double g = nodes_[out.index].grad[0];
    const Tensor& q = value(q_logits);
    const Tensor& p = value(p_logits);
    Tensor* gq = needs(q_logits) ? &grad_of(q_logits) : nullptr;
    Tensor* gp = needs(p_logits) ? &grad_of(p_logits) : nullptr;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double gamma = numerics::sigmoid(q[i]);
      if (gq) (*gq)[i] += g * gamma * (1.0 - gamma) * (q[i] - p[i]);
      if (gp) (*gp)[i] += g * (numerics::sigmoid(p[i]) - gamma);
    }
  });
  return out;
}

void Graph::backward(Var loss) {
  const Tensor& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ShapeError("backward: loss must be 1x1, got " + shape_str(lv));
  }
  if (!nodes_[loss.index].requires_grad) return;
  grad_of(loss)[0] = 1.0;
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.backprop) n.backprop();
    if (n.param) {
      Tensor& dst = n.param->grad;
      if (!dst.same_shape(n.grad)) dst = Tensor(n.grad.rows(), n.grad.cols());
      for (std::size_t k = 0; k < n.grad.size(); ++k) dst[k] += n.grad[k];
    }
  }
}

}  // namespace varembed::numerics
