// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <vector>

#include "varembed/error.hpp"
#include "varembed/numerics/gradcheck.hpp"
#include "varembed/numerics/graph.hpp"
#include "varembed/numerics/optim.hpp"
#include "varembed/numerics/tensor.hpp"

using namespace varembed;
using namespace varembed::numerics;

namespace {

Tensor make(std::size_t r, std::size_t c, std::vector<double> v) {
  Tensor t(r, c);
  for (std::size_t i = 0; i < v.size(); ++i) t[i] = v[i];
  return t;
}

Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Tensor t(r, c);
  fill_uniform(t, rng, -scale, scale);
  return t;
}

}  // namespace

TEST_CASE("scalar nonlinearities stay finite and match definitions") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(1000.0) == 1.0);
  CHECK(sigmoid(-1000.0) >= 0.0);
  CHECK(std::isfinite(log_sigmoid(-1000.0)));
  CHECK(log_sigmoid(-1000.0) == doctest::Approx(-1000.0));
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(softplus(800.0) == doctest::Approx(800.0));
  CHECK(sigmoid(logit(0.3)) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(sigmoid(2.0) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-15));
}

TEST_CASE("matmul matches a hand computation") {
  const Tensor a = make(2, 3, {1, 2, 3, 4, 5, 6});
  const Tensor b = make(3, 2, {7, 8, 9, 10, 11, 12});
  const Tensor c = matmul(a, b);
  CHECK(c == make(2, 2, {58, 64, 139, 154}));
  CHECK(matmul_nt(a, transpose(b)) == c);
  CHECK(matmul_tn(transpose(a), b) == c);
  CHECK_THROWS_AS(matmul(a, a), ShapeError);
  CHECK_THROWS_AS(add(a, b), ShapeError);
}

TEST_CASE("elementwise kernels") {
  const Tensor a = make(1, 3, {1, -2, 3});
  const Tensor b = make(1, 3, {4, 5, -6});
  CHECK(add(a, b) == make(1, 3, {5, 3, -3}));
  CHECK(sub(a, b) == make(1, 3, {-3, -7, 9}));
  CHECK(mul(a, b) == make(1, 3, {4, -10, -18}));
  CHECK(sum(a) == 2.0);
  CHECK(squared_norm(a) == 14.0);
  const Tensor t = tanh(a);
  CHECK(t[1] == doctest::Approx(std::tanh(-2.0)));
}

TEST_CASE("softmax rows are normalized even for huge logits") {
  const Tensor z = make(2, 3, {1000, 1001, 1002, -5, 0, 5});
  const Tensor p = softmax(z);
  const Tensor lp = log_softmax(z);
  for (std::size_t r = 0; r < 2; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      s += p(r, c);
      CHECK(std::exp(lp(r, c)) == doctest::Approx(p(r, c)).epsilon(1e-12));
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK(p(0, 0) == doctest::Approx(p(1, 0) * 0 + 1.0 / (1 + std::exp(1.0) + std::exp(2.0))));
}

TEST_CASE("threaded kernels are bitwise identical to single-threaded ones") {
  Rng rng(11);
  const Tensor a = random_tensor(300, 257, rng);
  const Tensor b = random_tensor(257, 300, rng);
  set_thread_count(1);
  const Tensor c1 = matmul(a, b);
  const Tensor t1 = matmul_tn(a, a);
  set_thread_count(4);
  const Tensor c4 = matmul(a, b);
  const Tensor t4 = matmul_tn(a, a);
  set_thread_count(1);
  CHECK(c1 == c4);
  CHECK(t1 == t4);
}

TEST_CASE("rng is reproducible and in range") {
  Rng a(5), b(5), c(6);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const double x = a.uniform();
    CHECK(x == b.uniform());
    differs = differs || x != c.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    CHECK(a.below(7) < 7);
    b.below(7);
    c.below(7);
  }
  CHECK(differs);
}

TEST_CASE("rmsprop step matches the update rule") {
  Tensor p = make(1, 2, {1.0, -1.0});
  const Tensor g = make(1, 2, {2.0, 0.0});
  RmsPropState s;
  s.accumulator = Tensor(1, 2);
  rmsprop_step(p, g, s);
  CHECK(s.accumulator[0] == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(p[0] == doctest::Approx(1.0 - 0.01 * 2.0 / std::sqrt(0.4 + 1e-8)).epsilon(1e-15));
  CHECK(p[1] == -1.0);
  const Tensor bad = make(1, 2, {NAN, 0.0});
  CHECK_THROWS_AS(rmsprop_step(p, bad, s), NumericError);
}

TEST_CASE("global norm clipping is normalized by the batch size") {
  Tensor g1 = make(1, 2, {6.0, 0.0});
  Tensor g2 = make(1, 1, {8.0});
  auto r = clip_global_norm({&g1, &g2}, 1.0, 2.0);
  CHECK(r.norm == doctest::Approx(10.0));
  CHECK(r.factor == doctest::Approx(0.2));
  CHECK(g1[0] == doctest::Approx(1.2));
  CHECK(g2[0] == doctest::Approx(1.6));
  Tensor small = make(1, 1, {1.5});
  r = clip_global_norm({&small}, 1.0, 2.0);
  CHECK(r.factor == 1.0);
  CHECK(small[0] == 1.5);
}

TEST_CASE("relative error definition") {
  CHECK(relative_error(1.0, 1.0) == 0.0);
  CHECK(relative_error(1.0, 2.0) == doctest::Approx(0.5));
  CHECK(relative_error(0.0, 0.0) == 0.0);
  CHECK(relative_error(1e-12, 0.0) == doctest::Approx(1e-4));
}

TEST_CASE("graph backward requires a scalar loss") {
  Graph g;
  const auto a = g.input(make(1, 2, {1, 2}));
  CHECK_THROWS_AS(g.backward(a), ShapeError);
}

TEST_CASE("every graph operation passes a finite-difference check") {
  Rng rng(3);
  Tensor A = random_tensor(3, 4, rng), B = random_tensor(4, 5, rng), C = random_tensor(3, 4, rng);
  Tensor row = random_tensor(1, 4, rng), table = random_tensor(6, 5, rng);
  Tensor q = random_tensor(3, 4, rng, 2.0), p = random_tensor(3, 4, rng, 2.0);
  Tensor V = random_tensor(7, 5, rng);
  ParameterSet ps;
  ps.add("A", A);
  ps.add("B", B);
  ps.add("C", C);
  ps.add("row", row);
  ps.add("table", table);
  ps.add("q", q);
  ps.add("p", p);
  ps.add("V", V);

  RaggedIndex groups;
  for (std::vector<std::size_t> gidx : {std::vector<std::size_t>{0, 2}, {5}, {1, 1, 3}}) {
    groups.push_group(gidx);
  }
  const std::vector<std::size_t> ids{4, 0, 4};
  const std::vector<std::size_t> targets{1, 4, 0};
  const std::vector<std::size_t> targets6{1, 4, 0, 6, 2, 3};

  auto build = [&](Graph& g, bool track) {
    auto P = [&](const char* n, const Tensor& t) {
      return track ? g.param(ps.get(n)) : g.constant_ref(t);
    };
    const auto a = P("A", A), b = P("B", B), c = P("C", C), r = P("row", row);
    const auto t = P("table", table), vq = P("q", q), vp = P("p", p), v = P("V", V);
    auto x = g.add_row(g.sub(g.mul(a, g.tanh(c)), g.scale(c, 0.3)), r);   // 3×4
    auto y = g.sigmoid(g.matmul(x, b));                                   // 3×5
    y = g.add(y, g.gather_rows(t, ids));
    y = g.add(y, g.gather_sum(t, groups));
    const auto stacked = g.concat_rows(std::vector<Graph::Var>{y, g.rows(y, 1, 2)});  // 5×5
    const auto loss1 = g.softmax_nll(g.columns(y, 0, 5), targets);
    const auto loss2 = g.projected_softmax_nll(g.concat_rows(std::vector<Graph::Var>{stacked, g.rows(y, 0, 1)}), v, targets6);
    const auto loss3 = g.bernoulli_kl(vq, vp);
    const auto loss4 = g.sum(g.columns(g.matmul_nt(x, x), 1, 2));
    return g.add(g.add(loss1, g.scale(loss2, 0.5)), g.add(loss3, g.scale(loss4, 0.1)));
  };
  auto loss = [&] {
    Graph g(false);
    return g.value(build(g, false)).item();
  };
  auto grads = [&] {
    ps.zero_grads();
    Graph g(true);
    g.backward(build(g, true));
  };
  const auto report = grad_check(loss, grads, ps, {});
  for (const auto& e : report.entries) {
    INFO(e.name);
    CHECK(e.max_relative_error < 1e-6);
  }
}

TEST_CASE("bernoulli_kl node matches the closed form and is nonnegative") {
  const Tensor q = make(1, 3, {0.3, -2.0, 5.0});
  const Tensor p = make(1, 3, {0.3, 1.0, -1.0});
  Graph g(false);
  const double kl = g.value(g.bernoulli_kl(g.input(q), g.input(p))).item();
  double expected = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double gq = 1.0 / (1.0 + std::exp(-q[i])), gp = 1.0 / (1.0 + std::exp(-p[i]));
    expected += gq * std::log(gq / gp) + (1 - gq) * std::log((1 - gq) / (1 - gp));
  }
  CHECK(kl == doctest::Approx(expected).epsilon(1e-12));
  CHECK(kl > 0.0);
}

TEST_CASE("analytic gradients of tiny graphs") {
  Tensor x = make(1, 1, {3.0});
  ParameterSet ps;
  ps.add("x", x);
  {
    Graph g;
    const auto v = g.param(ps.get("x"));
    g.backward(g.mul(v, v));
    CHECK(ps.get("x").grad[0] == doctest::Approx(6.0));
  }
  x[0] = 0.0;
  ps.zero_grads();
  {
    Graph g;
    g.backward(g.sigmoid(g.param(ps.get("x"))));
    CHECK(ps.get("x").grad[0] == doctest::Approx(0.25));
  }
  CHECK(sigmoid(std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-15));
  const Tensor u = softmax(Tensor(1, 4));
  for (double p : u.data()) CHECK(p == 0.25);
}

TEST_CASE("rmsprop hand-evaluated steps and zero-gradient no-op") {
  Tensor p = make(1, 1, {1.0});
  RmsPropState s;
  s.accumulator = Tensor(1, 1);
  rmsprop_step(p, make(1, 1, {1.0}), s);
  CHECK(s.accumulator[0] == doctest::Approx(0.1).epsilon(1e-15));
  const double first = 1.0 - p[0];
  CHECK(first == doctest::Approx(0.01 / std::sqrt(0.1 + 1e-8)).epsilon(1e-12));
  const double before = p[0];
  rmsprop_step(p, make(1, 1, {1.0}), s);
  const double second = before - p[0];
  CHECK(second < first);
  CHECK(second == doctest::Approx(0.01 / std::sqrt(0.19 + 1e-8)).epsilon(1e-12));

  const double held = p[0];
  const double acc = s.accumulator[0];
  rmsprop_step(p, make(1, 1, {0.0}), s);
  CHECK(p[0] == held);
  CHECK(s.accumulator[0] == doctest::Approx(0.9 * acc));
}

TEST_CASE("clipping never increases the norm and scales to the threshold") {
  Tensor g = make(1, 2, {0.0, 8.0});
  const auto r = clip_global_norm({&g}, 1.0, 2.0);
  CHECK(r.factor == doctest::Approx(0.25));
  CHECK(std::sqrt(squared_norm(g)) / 2.0 == doctest::Approx(1.0));
  Tensor z(1, 3);
  CHECK(clip_global_norm({&z}, 1.0, 1.0).factor == 1.0);
  Rng rng(9);
  for (int i = 0; i < 20; ++i) {
    Tensor t = random_tensor(3, 3, rng, 3.0);
    const double n0 = squared_norm(t);
    clip_global_norm({&t}, 0.7, 1.5);
    CHECK(squared_norm(t) <= n0 * (1 + 1e-15));
  }
}

TEST_CASE("grad_check on a quadratic is exact to rounding") {
  Tensor w = make(1, 3, {0.5, -1.5, 2.0});
  ParameterSet ps;
  ps.add("w", w);
  auto loss = [&] { return 0.5 * squared_norm(w) + 3.0 * w[0] * w[1]; };
  auto grads = [&] {
    auto& g = ps.get("w").grad;
    g[0] = w[0] + 3.0 * w[1];
    g[1] = w[1] + 3.0 * w[0];
    g[2] = w[2];
  };
  CHECK(grad_check(loss, grads, ps).max_relative_error() < 1e-8);
}
