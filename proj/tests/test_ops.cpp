#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mcl/errors.hpp"
#include "mcl/gradcheck.hpp"
#include "mcl/ops.hpp"
#include "oracles.hpp"

using namespace mcl;

TEST_CASE("matmul variants agree with loops") {
  Rng rng(3);
  Tensor a = oracle::random_tensor(rng, {4, 3}), b = oracle::random_tensor(rng, {3, 5});
  Tape tape;
  const Tensor ab = matmul(tape.constant(a), tape.constant(b)).value();
  const Tensor ab_nt = matmul_nt(tape.constant(a), tape.constant(b.transposed())).value();
  const Tensor ab_tn = matmul_tn(tape.constant(a.transposed()), tape.constant(b)).value();
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 3; ++k) s += a.at(i, k) * b.at(k, j);
      CHECK(ab.at(i, j) == doctest::Approx(s).epsilon(1e-14));
      CHECK(ab_nt.at(i, j) == doctest::Approx(s).epsilon(1e-14));
      CHECK(ab_tn.at(i, j) == doctest::Approx(s).epsilon(1e-14));
    }
  CHECK_THROWS_AS(matmul(tape.constant(a), tape.constant(a)), DimensionError);
}

TEST_CASE("gram is bitwise symmetric") {
  Rng rng(5);
  Tape tape;
  const Tensor g = gram(tape.constant(oracle::random_tensor(rng, {7, 4}))).value();
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 7; ++j) CHECK(g.at(i, j) == g.at(j, i));
}

TEST_CASE("l2_normalize_rows") {
  Tape tape;
  const Tensor y = l2_normalize_rows(tape.constant(Tensor({2, 2}, {3.0, 4.0, 0.0, 0.0}))).value();
  CHECK(y.at(0, 0) == doctest::Approx(0.6));
  CHECK(y.at(0, 1) == doctest::Approx(0.8));
  // Zero rows stay finite.
  CHECK(y.at(1, 0) == 0.0);
  CHECK(y.all_finite());
}

TEST_CASE("softmax of [1, 2]") {
  Tape tape;
  const Tensor p = softmax_rows(tape.constant(Tensor({1, 2}, {1.0, 2.0})), 1.0).value();
  const double e = std::exp(1.0);
  CHECK(p[0] == doctest::Approx(1.0 / (1.0 + e)).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(e / (1.0 + e)).epsilon(1e-15));
}

TEST_CASE("softmax is shift invariant and stable for large logits") {
  Tape tape;
  const Tensor p = softmax_rows(tape.constant(Tensor({1, 3}, {1000.0, 1001.0, 999.0})), 1.0).value();
  const Tensor q = softmax_rows(tape.constant(Tensor({1, 3}, {1.0, 2.0, 0.0})), 1.0).value();
  for (std::size_t i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(q[i]).epsilon(1e-14));
}

TEST_CASE("stable_arccos clamps at the poles") {
  CHECK(stable_arccos(1.0) == doctest::Approx(std::acos(1.0 - kArccosClamp)).epsilon(1e-15));
  CHECK(stable_arccos(1.0) == doctest::Approx(4.4721e-4).epsilon(1e-4));
  CHECK(stable_arccos(-2.0) == doctest::Approx(std::acos(-1.0 + kArccosClamp)).epsilon(1e-15));
  CHECK(std::isfinite(stable_arccos_derivative(1.0)));
  CHECK(stable_arccos(0.5) == doctest::Approx(std::numbers::pi / 3).epsilon(1e-15));
}

TEST_CASE("margin_cosine caps at pi with zero slope") {
  Tape tape;
  Var theta = tape.variable(Tensor({2}, {0.5, std::numbers::pi - 0.1}));
  Var out = margin_cosine(theta, 0.4);
  CHECK(out.value()[0] == doctest::Approx(std::cos(0.9)).epsilon(1e-15));
  CHECK(out.value()[1] == -1.0);
  tape.backward(sum(out));
  CHECK(tape.grad(theta)[0] == doctest::Approx(-std::sin(0.9)).epsilon(1e-15));
  CHECK(tape.grad(theta)[1] == 0.0);
}

TEST_CASE("nce_terms matches the loop oracle") {
  Rng rng(11);
  Tensor l = oracle::random_tensor(rng, {5, 5}, -3, 3);
  std::vector<std::vector<double>> rows(5, std::vector<double>(5));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) rows[i][j] = l.at(i, j);
  Tape tape;
  const double total = sum(nce_terms(tape.constant(l))).value().item();
  CHECK(total == doctest::Approx(oracle::cross_entropy_diag(rows)).epsilon(1e-13));
}

TEST_CASE("l1_distance and its subgradient") {
  Tape tape;
  Var a = tape.variable(Tensor({3}, {1.0, -1.0, 2.0}));
  Var b = tape.constant(Tensor({3}, {0.5, 1.0, 2.0}));
  Var d = l1_distance(a, b);
  CHECK(d.value().item() == 2.5);
  tape.backward(d);
  CHECK(tape.grad(a) == Tensor({3}, {1.0, -1.0, 0.0}));
}

TEST_CASE("conv2d matches the direct loop oracle") {
  Rng rng(13);
  for (std::size_t k : {1, 2, 3}) {
    for (std::size_t stride : {1, 2}) {
      Tensor x = oracle::random_tensor(rng, {7, 6, 2});
      Tensor w = oracle::random_tensor(rng, {k, k, 2, 3});
      Tensor b = oracle::random_tensor(rng, {3});
      Tape tape;
      const Tensor got = conv2d(tape.constant(x), tape.constant(w), tape.constant(b), stride).value();
      const Tensor want = oracle::conv2d(x, w, b, stride);
      REQUIRE(got.dims() == want.dims());
      for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("replace_diagonal routes gradients") {
  Tape tape;
  Var m = tape.variable(Tensor({2, 2}, {1, 2, 3, 4}));
  Var d = tape.variable(Tensor({2}, {9, 8}));
  Var r = replace_diagonal(m, d);
  CHECK(r.value() == Tensor({2, 2}, {9, 2, 3, 8}));
  tape.backward(sum(r));
  CHECK(tape.grad(m) == Tensor({2, 2}, {0, 1, 1, 0}));
  CHECK(tape.grad(d) == Tensor({2}, {1, 1}));
}

TEST_CASE("gradcheck flags a wrong derivative") {
  // cos(x) with the backward of sin: the checker must notice.
  GradcheckInstance inst;
  inst.leaves = {Tensor({3}, {0.3, 1.1, -0.7})};
  inst.fn = [](Tape& tape, const std::vector<Var>& v) {
    Tensor out(v[0].dims());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::cos(v[0].value()[i]);
    const auto id = v[0].id();
    Var r = tape.record(out, {v[0]}, [id](Tape& t, const Tensor& g) {
      for (std::size_t i = 0; i < g.size(); ++i) (*t.grad_slot(id))[i] += g[i] * std::cos(t.value(id)[i]);
    });
    return sum(r);
  };
  CHECK(max_relative_error(inst, 1e-5, 1e-6) > 0.1);
}

TEST_CASE("gradcheck suite, reduced instance count") {
  GradcheckSettings s;
  s.instances = 10;
  for (const auto& r : run_gradcheck(s)) {
    INFO(r.name);
    CHECK(r.passed);
  }
}
