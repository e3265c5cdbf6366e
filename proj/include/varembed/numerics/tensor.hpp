// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace varembed::numerics {

// Dense row-major matrix of doubles. Vectors are 1×n, scalars 1×1; nothing in
// the models needs rank > 2.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Tensor scalar(double value) { return Tensor(1, 1, value); }
  static Tensor row_vector(std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  std::array<std::size_t, 2> shape() const { return {rows_, cols_}; }
  bool same_shape(const Tensor& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const double& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  const double& operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  // Scalar value of a 1×1 tensor; throws ShapeError otherwise.
  double item() const;

  void fill(double value);
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Scalar nonlinearities, written to stay finite for large |x|.
double sigmoid(double x);
double log_sigmoid(double x);
double softplus(double x);
double logit(double p);

// Elementwise and linear-algebra kernels. Shape mismatches throw ShapeError.
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor matmul(const Tensor& a, const Tensor& b);     // a · b
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a · bᵀ
Tensor matmul_tn(const Tensor& a, const Tensor& b);  // aᵀ · b
Tensor transpose(const Tensor& a);
// Row-wise softmax / log-softmax with max subtraction.
Tensor softmax(const Tensor& x);
Tensor log_softmax(const Tensor& x);

double sum(const Tensor& x);
double squared_norm(const Tensor& x);

// Kernels split output rows across this many threads when the work is large.
// Each output element is reduced in a fixed order, so results do not depend
// on the thread count. Defaults to $VAREMBED_THREADS, else 1.
void set_thread_count(unsigned n);
unsigned thread_count();

// Seeded generator used for every random draw in the toolkit. The engine's
// output sequence is fixed by the standard; the conversions below are ours,
// so draws are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::size_t below(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

void fill_uniform(Tensor& t, Rng& rng, double lo, double hi);

}  // namespace varembed::numerics
