// SPDX-License-Identifier: Apache-2.0
#include "varembed/numerics/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>

#include "varembed/error.hpp"

namespace varembed::numerics {

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

Tensor Tensor::row_vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(1, n, std::move(values));
}

double Tensor::item() const {
  if (rows_ != 1 || cols_ != 1) {
    throw ShapeError("item() on a " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                     " tensor");
  }
  return data_[0];
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double log_sigmoid(double x) { return -softplus(-x); }

double logit(double p) { return std::log(p) - std::log1p(-p); }

namespace {

std::string shape_str(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                     shape_str(b));
  }
}

template <typename F>
Tensor map(const Tensor& x, F f) {
  Tensor out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

template <typename F>
Tensor zip(const Tensor& a, const Tensor& b, const char* op, F f) {
  require_same(a, b, op);
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

unsigned initial_thread_count() {
  if (const char* env = std::getenv("VAREMBED_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  return 1;
}

unsigned g_threads = initial_thread_count();

// Runs body(begin, end) over [0, rows) in contiguous chunks.
template <typename Body>
void for_rows(std::size_t rows, std::size_t work_per_row, Body body) {
  const unsigned threads = g_threads;
  constexpr std::size_t kMinWork = 1 << 16;
  if (threads <= 1 || rows < 2 || rows * work_per_row < kMinWork) {
    body(std::size_t{0}, rows);
    return;
  }
  const std::size_t n = std::min<std::size_t>(threads, rows);
  const std::size_t chunk = (rows + n - 1) / n;
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < n; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(rows, begin + chunk);
    if (begin < end) pool.emplace_back([=] { body(begin, end); });
  }
  body(0, std::min(rows, chunk));
}

}  // namespace

void set_thread_count(unsigned n) { g_threads = std::max(1u, n); }
unsigned thread_count() { return g_threads; }

Tensor sigmoid(const Tensor& x) { return map(x, [](double v) { return sigmoid(v); }); }
Tensor tanh(const Tensor& x) { return map(x, [](double v) { return std::tanh(v); }); }

Tensor add(const Tensor& a, const Tensor& b) {
  return zip(a, b, "add", [](double x, double y) { return x + y; });
}
Tensor sub(const Tensor& a, const Tensor& b) {
  return zip(a, b, "sub", [](double x, double y) { return x - y; });
}
Tensor mul(const Tensor& a, const Tensor& b) {
  return zip(a, b, "mul", [](double x, double y) { return x * y; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + shape_str(a) + " · " + shape_str(b));
  }
  Tensor out(a.rows(), b.cols());
  const std::size_t n = a.cols();
  const std::size_t p = b.cols();
  for_rows(a.rows(), n * p, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double* o = &out(i, 0);
      for (std::size_t k = 0; k < n; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        const double* brow = &b(k, 0);
        for (std::size_t j = 0; j < p; ++j) o[j] += aik * brow[j];
      }
    }
  });
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: " + shape_str(a) + " · (" + shape_str(b) + ")ᵀ");
  }
  Tensor out(a.rows(), b.rows());
  const std::size_t n = a.cols();
  for_rows(a.rows(), n * b.rows(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double* arow = &a(i, 0);
      for (std::size_t j = 0; j < b.rows(); ++j) {
        const double* brow = &b(j, 0);
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) acc += arow[k] * brow[k];
        out(i, j) = acc;
      }
    }
  });
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: (" + shape_str(a) + ")ᵀ · " + shape_str(b));
  }
  Tensor out(a.cols(), b.cols());
  const std::size_t p = b.cols();
  for_rows(a.cols(), a.rows() * p, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = 0; r < a.rows(); ++r) {
      const double* brow = &b(r, 0);
      for (std::size_t i = begin; i < end; ++i) {
        const double ari = a(r, i);
        if (ari == 0.0) continue;
        double* o = &out(i, 0);
        for (std::size_t j = 0; j < p; ++j) o[j] += ari * brow[j];
      }
    }
  });
  return out;
}

Tensor transpose(const Tensor& a) {
  Tensor out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Tensor log_softmax(const Tensor& x) {
  Tensor out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    if (row.empty()) continue;
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    const double lse = mx + std::log(z);
    for (std::size_t c = 0; c < row.size(); ++c) out(r, c) = row[c] - lse;
  }
  return out;
}

Tensor softmax(const Tensor& x) {
  Tensor out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    if (row.empty()) continue;
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      out(r, c) = std::exp(row[c] - mx);
      z += out(r, c);
    }
    for (std::size_t c = 0; c < row.size(); ++c) out(r, c) /= z;
  }
  return out;
}

double sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return s;
}

double squared_norm(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v * v;
  return s;
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw InputError("Rng::below(0)");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

void fill_uniform(Tensor& t, Rng& rng, double lo, double hi) {
  for (double& v : t.data()) v = rng.uniform(lo, hi);
}

}  // namespace varembed::numerics
