#include <cmath>

#include "doctest.h"
#include "mcl/adam.hpp"
#include "mcl/errors.hpp"

using namespace mcl;

namespace {

// Scalar reference Adam with bias correction.
struct ScalarAdam {
  double lr, b1, b2, eps, m = 0, v = 0;
  int t = 0;
  double step(double p, double g) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    return p - lr * mh / (std::sqrt(vh) + eps);
  }
};

}  // namespace

TEST_CASE("one scalar step matches the reference") {
  AdamState s;
  Tensor p = Tensor({1}, {1.0});
  adam_step(s, {{"p", &p}}, {{"p", Tensor({1}, {1.0})}});
  ScalarAdam ref{1e-4, 0.0, 0.999, 1e-8};
  const double expected = ref.step(1.0, 1.0);
  CHECK(expected == doctest::Approx(1.0 - 1e-4 / (1.0 + 1e-8)).epsilon(1e-15));
  CHECK(p[0] == doctest::Approx(expected).epsilon(1e-15));
  CHECK(s.step == 1);
}

TEST_CASE("many steps track the reference") {
  AdamState s;
  s.config.beta1 = 0.9;
  s.config.learning_rate = 1e-2;
  Tensor p = Tensor({2}, {0.3, -0.2});
  ScalarAdam r0{1e-2, 0.9, 0.999, 1e-8}, r1{1e-2, 0.9, 0.999, 1e-8};
  double q0 = 0.3, q1 = -0.2;
  for (int i = 0; i < 50; ++i) {
    Tensor g({2}, {2 * p[0] - 1, std::sin(p[1])});
    q0 = r0.step(q0, 2 * q0 - 1);
    q1 = r1.step(q1, std::sin(q1));
    adam_step(s, {{"p", &p}}, {{"p", g}});
  }
  CHECK(p[0] == doctest::Approx(q0).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(q1).epsilon(1e-12));
}

TEST_CASE("zero gradient and zero learning rate leave parameters unchanged") {
  AdamState s;
  Tensor p = Tensor({2}, {0.5, 0.25});
  adam_step(s, {{"p", &p}}, {{"p", Tensor({2})}});
  CHECK(p == Tensor({2}, {0.5, 0.25}));
  CHECK(s.step == 1);

  AdamState z;
  z.config.learning_rate = 0.0;
  adam_step(z, {{"p", &p}}, {{"p", Tensor({2}, {3.0, -7.0})}});
  CHECK(p == Tensor({2}, {0.5, 0.25}));
}

TEST_CASE("beta1 = 0 keeps the current gradient as first moment") {
  AdamState s;
  Tensor p = Tensor({1}, {0.0});
  for (double g : {0.5, -2.0, 3.0}) {
    adam_step(s, {{"p", &p}}, {{"p", Tensor({1}, {g})}});
    CHECK(s.first_moment.at("p")[0] == g);
  }
}

TEST_CASE("non-finite gradients abort before any update") {
  AdamState s;
  Tensor a = Tensor({1}, {1.0}), b = Tensor({1}, {2.0});
  CHECK_THROWS_AS(adam_step(s, {{"a", &a}, {"b", &b}}, {{"a", Tensor({1}, {1.0})}, {"b", Tensor({1}, {NAN})}}),
                  DivergenceError);
  CHECK(a[0] == 1.0);
  CHECK(s.step == 0);
  CHECK_THROWS_AS(adam_step(s, {{"a", &a}}, {}), DimensionError);
  CHECK_THROWS_AS(adam_step(s, {{"a", &a}}, {{"a", Tensor({2})}}), DimensionError);
}
