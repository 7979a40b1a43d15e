#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "evhan/autodiff.hpp"
#include "evhan/errors.hpp"
#include "gradcheck.hpp"

using namespace evhan;
using evhan::testing::central_difference;
using evhan::testing::rel_error;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -2.0, double hi = 2.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> d(lo, hi);
  for (auto& v : t.values()) v = d(rng);
  return t;
}

// Builds loss = sum(build(params...) * R) for a fixed random R, then checks
// every coordinate of every parameter against central differences.
double max_grad_error(std::vector<Tensor*> params, const std::function<ad::Var(ad::Graph&)>& build,
                      std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  Tensor weights;
  auto loss_value = [&](bool with_backward) {
    ad::Graph g;
    ad::Var out = build(g);
    if (weights.size() == 0) weights = random_tensor(g.value(out).shape(), rng);
    ad::Var loss = ad::sum(ad::mul(out, g.constant(weights)));
    if (with_backward) g.backward(loss);
    return g.value(loss)[0];
  };
  for (auto* p : params) p->zero_grad();
  loss_value(true);
  double worst = 0.0;
  for (auto* p : params) {
    const std::vector<double> analytic(p->grad().begin(), p->grad().end());
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double numeric = central_difference(*p, i, [&] { return loss_value(false); });
      worst = std::max(worst, rel_error(analytic[i], numeric));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("matmul examples") {
  ad::Graph g;
  Tensor eye = Tensor::matrix(2, 2, {1, 0, 0, 1});
  auto c = ad::matmul(g.constant(eye), g.constant(Tensor::matrix(2, 1, {2, 3})));
  CHECK(g.value(c) == Tensor::matrix(2, 1, {2, 3}));
  auto d = ad::matmul(g.constant(Tensor::matrix(1, 2, {1, 2})), g.constant(Tensor::matrix(2, 1, {3, 4})));
  CHECK(g.value(d)[0] == 11.0);
}

TEST_CASE("matmul shape mismatch names both shapes") {
  ad::Graph g;
  auto a = g.constant(Tensor::zeros({2, 3}));
  auto b = g.constant(Tensor::zeros({2, 3}));
  try {
    ad::matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
  }
}

TEST_CASE("gradient of sum(a b) w.r.t. a is ones times b transpose") {
  std::mt19937_64 rng(3);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = random_tensor({4, 2}, rng);
  ad::Graph g;
  auto loss = ad::sum(ad::matmul(g.param(a), g.param(b)));
  a.zero_grad();
  b.zero_grad();
  g.backward(loss);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 4; ++k) {
      const double expected = b.at(k, 0) + b.at(k, 1);
      const double numeric = central_difference(a, i * 4 + k, [&] {
        ad::Graph h;
        return h.value(ad::sum(ad::matmul(h.constant(a), h.constant(b))))[0];
      });
      CHECK(a.grad()[i * 4 + k] == doctest::Approx(expected).epsilon(1e-12));
      CHECK(rel_error(a.grad()[i * 4 + k], numeric) < 1e-6);
    }
  }
}

TEST_CASE("elementwise values") {
  ad::Graph g;
  auto z = g.constant(Tensor::scalar(0.0));
  CHECK(g.value(ad::sigmoid(z))[0] == 0.5);
  CHECK(g.value(ad::tanh(z))[0] == 0.0);
  CHECK(g.value(ad::exp(z))[0] == 1.0);
  CHECK_THROWS_AS(ad::add(g.constant(Tensor::zeros({2})), g.constant(Tensor::zeros({3}))), ShapeError);
}

TEST_CASE("sigmoid derivative at 1 matches finite differences") {
  Tensor x = Tensor::scalar(1.0);
  ad::Graph g;
  x.zero_grad();
  g.backward(ad::sum(ad::sigmoid(g.param(x))));
  const double numeric = central_difference(x, 0, [&] {
    ad::Graph h;
    return h.value(ad::sigmoid(h.constant(x)))[0];
  });
  CHECK(std::abs(x.grad()[0] - numeric) < 1e-6);
  const double s = 1.0 / (1.0 + std::exp(-1.0));
  CHECK(x.grad()[0] == doctest::Approx(s * (1 - s)).epsilon(1e-14));
}

TEST_CASE("masked_softmax examples") {
  ad::Graph g;
  const std::uint8_t all[] = {1, 1, 1};
  auto u = ad::masked_softmax(g.constant(Tensor::vector({2.5, 2.5, 2.5})), all);
  for (double v : g.value(u).values()) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));

  const std::uint8_t first[] = {1, 0};
  auto s = ad::masked_softmax(g.constant(Tensor::vector({0, 0})), first);
  CHECK(g.value(s)[0] == 1.0);
  CHECK(g.value(s)[1] == 0.0);

  const std::uint8_t both[] = {1, 1};
  auto big = ad::masked_softmax(g.constant(Tensor::vector({1000, 999})), both);
  // Oracle: the same softmax evaluated on scores shifted down by 999.
  const double e1 = std::exp(1.0), e0 = std::exp(0.0);
  CHECK(std::isfinite(g.value(big)[0]));
  CHECK(g.value(big)[0] == doctest::Approx(e1 / (e1 + e0)).epsilon(1e-14));
  CHECK(g.value(big)[1] == doctest::Approx(e0 / (e1 + e0)).epsilon(1e-14));

  const std::uint8_t none[] = {0, 0};
  CHECK_THROWS_AS(ad::masked_softmax(g.constant(Tensor::vector({1, 2})), none), UsageError);
}

TEST_CASE("masked_softmax is a distribution on random inputs") {
  std::mt19937_64 rng(11);
  std::bernoulli_distribution coin(0.6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t T = 1 + trial % 9;
    Tensor s = random_tensor({T}, rng, -50, 50);
    std::vector<std::uint8_t> mask(T);
    for (auto& m : mask) m = coin(rng);
    mask[trial % T] = 1;
    ad::Graph g;
    const Tensor& p = g.value(ad::masked_softmax(g.constant(s), mask));
    double total = 0.0;
    for (std::size_t i = 0; i < T; ++i) {
      CHECK(p[i] >= 0.0);
      if (!mask[i]) CHECK(p[i] == 0.0);
      total += p[i];
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("concat, split and slice") {
  ad::Graph g;
  Tensor a = Tensor::vector({1, 2});
  Tensor b = Tensor::vector({3});
  auto va = g.param(a);
  auto vb = g.param(b);
  auto c = ad::concat(va, vb, 0);
  CHECK(g.value(c) == Tensor::vector({1, 2, 3}));
  a.zero_grad();
  b.zero_grad();
  g.backward(ad::sum(c));
  CHECK(a.grad()[0] == 1.0);
  CHECK(a.grad()[1] == 1.0);
  CHECK(b.grad()[0] == 1.0);

  const std::size_t extents[] = {2, 1};
  auto parts = ad::split(c, 0, extents);
  CHECK(g.value(parts[0]) == a);
  CHECK(g.value(parts[1]) == b);

  auto m = g.constant(Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  CHECK(g.value(ad::slice(m, 1, 1, 3)) == Tensor::matrix(2, 2, {2, 3, 5, 6}));
  CHECK(g.value(ad::slice(m, 0, 1, 2)) == Tensor::matrix(1, 3, {4, 5, 6}));
  CHECK_THROWS_AS(ad::concat(m, g.constant(Tensor::zeros({3, 2})), 0), ShapeError);
}

TEST_CASE("backward examples") {
  Tensor w = Tensor::vector({0.5, -1.5, 2.0});
  {
    ad::Graph g;
    w.zero_grad();
    g.backward(ad::sum(g.param(w)));
    for (double d : w.grad()) CHECK(d == 1.0);
  }
  {
    ad::Graph g;
    auto v = g.param(w);
    w.zero_grad();
    g.backward(ad::scale(ad::sum(ad::mul(v, v)), 0.5));
    for (std::size_t i = 0; i < 3; ++i) CHECK(w.grad()[i] == doctest::Approx(w[i]).epsilon(1e-15));
  }
  {
    ad::Graph g;
    auto v = g.param(w);
    CHECK_THROWS_AS(g.backward(v), ShapeError);
  }
}

TEST_CASE("repeated backward accumulates into parameters") {
  Tensor w = Tensor::vector({1.0, 2.0});
  w.zero_grad();
  for (int i = 0; i < 3; ++i) {
    ad::Graph g;
    g.backward(ad::sum(g.param(w)));
  }
  CHECK(w.grad()[0] == 3.0);
  ad::Graph g;
  auto loss = ad::sum(g.param(w));
  g.backward(loss);
  g.backward(loss);
  CHECK(w.grad()[1] == 5.0);
}

TEST_CASE("diamond graph sums both path contributions") {
  // y = x*a + x*b with a = 2x and b = 3x: dy/dx = 4x + 6x = 10x
  Tensor x = Tensor::scalar(1.7);
  ad::Graph g;
  auto vx = g.param(x);
  auto a = ad::scale(vx, 2.0);
  auto b = ad::scale(vx, 3.0);
  auto y = ad::add(ad::mul(vx, a), ad::mul(vx, b));
  x.zero_grad();
  g.backward(ad::sum(y));
  CHECK(x.grad()[0] == doctest::Approx(10 * 1.7).epsilon(1e-14));
  // dy/da = x at the intermediate node
  CHECK(g.grad(a)[0] == doctest::Approx(1.7).epsilon(1e-14));
}

TEST_CASE("every op matches central differences on random inputs") {
  std::mt19937_64 rng(42);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = random_tensor({4, 2}, rng);
  Tensor c = random_tensor({3, 4}, rng);
  Tensor bias = random_tensor({4}, rng);
  Tensor s = random_tensor({5}, rng);
  Tensor table = random_tensor({6, 3}, rng);
  Tensor logits = random_tensor({5}, rng);
  const double tol = 1e-4;

  CHECK(max_grad_error({&a, &b}, [&](ad::Graph& g) { return ad::matmul(g.param(a), g.param(b)); }) < tol);
  CHECK(max_grad_error({&a, &c}, [&](ad::Graph& g) { return ad::add(g.param(a), g.param(c)); }) < tol);
  CHECK(max_grad_error({&a, &c}, [&](ad::Graph& g) { return ad::sub(g.param(a), g.param(c)); }) < tol);
  CHECK(max_grad_error({&a, &c}, [&](ad::Graph& g) { return ad::mul(g.param(a), g.param(c)); }) < tol);
  CHECK(max_grad_error({&a}, [&](ad::Graph& g) { return ad::sigmoid(g.param(a)); }) < tol);
  CHECK(max_grad_error({&a}, [&](ad::Graph& g) { return ad::tanh(g.param(a)); }) < tol);
  CHECK(max_grad_error({&a}, [&](ad::Graph& g) { return ad::exp(g.param(a)); }) < tol);
  CHECK(max_grad_error({&a, &bias}, [&](ad::Graph& g) { return ad::add_bias(g.param(a), g.param(bias)); }) < tol);
  CHECK(max_grad_error({&a}, [&](ad::Graph& g) { return ad::scale(g.param(a), -0.7); }) < tol);
  const std::uint8_t mask[] = {1, 0, 1, 1, 0};
  CHECK(max_grad_error({&s}, [&](ad::Graph& g) { return ad::masked_softmax(g.param(s), mask); }) < tol);
  CHECK(max_grad_error({&a, &c}, [&](ad::Graph& g) { return ad::concat(g.param(a), g.param(c), 1); }) < tol);
  CHECK(max_grad_error({&a}, [&](ad::Graph& g) { return ad::slice(g.param(a), 1, 1, 3); }) < tol);
  CHECK(max_grad_error({&a}, [&](ad::Graph& g) { return ad::sum(g.param(a)); }) < tol);
  CHECK(max_grad_error({&a}, [&](ad::Graph& g) { return ad::reshape(g.param(a), {2, 6}); }) < tol);
  const std::int64_t rows[] = {2, -1, 2, 5};
  CHECK(max_grad_error({&table}, [&](ad::Graph& g) { return ad::gather_rows(g.param(table), rows); }) < tol);
  CHECK(max_grad_error({&logits}, [&](ad::Graph& g) { return ad::softmax_cross_entropy(g.param(logits), 3); }) <
        tol);
}

TEST_CASE("gather_rows gives zero rows for negative indices") {
  ad::Graph g;
  const std::int64_t rows[] = {1, -1};
  auto out = ad::gather_rows(g.constant(Tensor::matrix(2, 2, {1, 2, 3, 4})), rows);
  CHECK(g.value(out) == Tensor::matrix(2, 2, {3, 4, 0, 0}));
  const std::int64_t bad[] = {2};
  CHECK_THROWS_AS(ad::gather_rows(g.constant(Tensor::matrix(2, 2, {1, 2, 3, 4})), bad), ShapeError);
}

TEST_CASE("tensor invariants") {
  CHECK_THROWS_AS(Tensor({2, 0}), ShapeError);
  CHECK_THROWS_AS(Tensor({2, 2}, {1, 2, 3}), ShapeError);
  Tensor t({2, 3});
  CHECK(t.size() == 6);
  CHECK_FALSE(t.has_grad());
  t.ensure_grad();
  CHECK(t.grad().size() == t.size());
}
