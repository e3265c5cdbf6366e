// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "varembed/numerics/tensor.hpp"

namespace varembed::numerics {

// Groups of row indices in compressed form: group g owns
// indices[offsets[g] .. offsets[g+1]).
struct RaggedIndex {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> indices;

  std::size_t groups() const { return offsets.size() - 1; }
  std::span<const std::size_t> group(std::size_t g) const {
    return {indices.data() + offsets[g], offsets[g + 1] - offsets[g]};
  }
  void push_group(std::span<const std::size_t> ids) {
    indices.insert(indices.end(), ids.begin(), ids.end());
    offsets.push_back(indices.size());
  }
};

// A named trainable tensor and its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor* value = nullptr;
  Tensor grad;
};

// Owns the gradient buffers for a fixed list of model tensors.
class ParameterSet {
 public:
  void add(std::string name, Tensor& value);
  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  Parameter& get(std::string_view name);
  std::vector<Parameter>& all() { return params_; }
  const std::vector<Parameter>& all() const { return params_; }
  void zero_grads();

 private:
  std::vector<Parameter> params_;
};

// Reverse-mode differentiation over a graph built once per minibatch.
// Nodes are appended in evaluation order, so backward() walks the node list
// in reverse. Values are computed eagerly when a node is created.
class Graph {
 public:
  struct Var {
    std::uint32_t index = 0;
  };

  // With track_gradients = false every parameter is treated as a constant
  // and no backward closures are recorded (evaluation passes).
  explicit Graph(bool track_gradients = true) : track_(track_gradients) {}

  Var input(Tensor value);
  // Refers to `p.value` without copying; backward() accumulates into p.grad.
  Var param(Parameter& p);
  // Read-only view of an external tensor (no gradient).
  Var constant_ref(const Tensor& value);

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;
  std::size_t node_count() const { return nodes_.size(); }

  Var matmul(Var a, Var b);     // a · b
  Var matmul_nt(Var a, Var b);  // a · bᵀ
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double factor);
  Var add_row(Var a, Var row);  // broadcasts a 1×n row over every row of a
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var columns(Var a, std::size_t begin, std::size_t count);
  Var rows(Var a, std::size_t begin, std::size_t count);
  Var concat_rows(std::span<const Var> parts);
  Var gather_rows(Var table, std::span<const std::size_t> ids);
  // Output row g is the sum of the table rows listed in group g.
  Var gather_sum(Var table, const RaggedIndex& groups);
  Var sum(Var a);
  // Σ_r −log softmax(logits_r)[targets_r]; returns 1×1.
  Var softmax_nll(Var logits, std::span<const std::size_t> targets);
  // Same as softmax_nll(matmul_nt(hidden, weights), targets) but never
  // materializes the rows × vocabulary logit matrix.
  Var projected_softmax_nll(Var hidden, Var weights, std::span<const std::size_t> targets);
  // Σ KL(Bernoulli(σ(q)) ‖ Bernoulli(σ(p))) over all elements; returns 1×1.
  Var bernoulli_kl(Var q_logits, Var p_logits);

  // Requires a 1×1 loss; throws ShapeError otherwise.
  void backward(Var loss);

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    std::function<void()> backprop;
  };

  Var push(Tensor value, bool requires_grad);
  bool needs(Var v) const { return nodes_[v.index].requires_grad; }
  Tensor& grad_of(Var v);
  void on_backward(Var out, std::function<void()> fn);

  bool track_;
  std::vector<Node> nodes_;
};

}  // namespace varembed::numerics
