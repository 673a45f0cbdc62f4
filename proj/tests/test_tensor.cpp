#include "doctest.h"
#include "mcl/errors.hpp"
#include "mcl/ops.hpp"
#include "mcl/tape.hpp"
#include "mcl/tensor.hpp"

using namespace mcl;

TEST_CASE("tensor construction validates sizes") {
  CHECK(Tensor().rank() == 0);
  CHECK(Tensor().size() == 1);
  CHECK(Tensor({2, 3}).size() == 6);
  CHECK_THROWS_AS(Tensor({2, 0}), DimensionError);
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0, 3.0}), DimensionError);
}

TEST_CASE("rank-2 accessors and transpose") {
  Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.at(1, 2) == 6.0);
  CHECK(t.row(1)[0] == 4.0);
  Tensor tt = t.transposed();
  CHECK(tt.dims() == Dims{3, 2});
  CHECK(tt.at(2, 1) == 6.0);
  CHECK(tt.transposed() == t);
  CHECK_THROWS_AS(t.reshaped({4}), DimensionError);
  CHECK(t.reshaped({6})[5] == 6.0);
}

TEST_CASE("feature grid invariants") {
  FeatureGrid g(2, 3, Tensor({6, 4}));
  CHECK(g.positions() == 6);
  CHECK(g.channels == 4);
  CHECK_THROWS_AS(FeatureGrid(2, 2, Tensor({6, 4})), DimensionError);
  CHECK_THROWS_AS(FeatureGrid(0, 2, Tensor({6, 4})), DimensionError);
}

TEST_CASE("backward requires a scalar seed") {
  Tape tape;
  Var a = tape.variable(Tensor({2}, {1.0, 2.0}));
  CHECK_THROWS_AS(tape.backward(a), UsageError);
}

TEST_CASE("gradients accumulate until zero_grad") {
  Tape tape;
  Var a = tape.variable(Tensor({2}, {1.0, -2.0}));
  Var loss = sum(scale(a, 3.0));
  tape.backward(loss);
  CHECK(tape.grad(a) == Tensor({2}, {3.0, 3.0}));
  tape.backward(loss);
  CHECK(tape.grad(a) == Tensor({2}, {6.0, 6.0}));
  tape.zero_grad();
  tape.backward(loss);
  CHECK(tape.grad(a) == Tensor({2}, {3.0, 3.0}));
}

TEST_CASE("constants receive no gradient and shared use accumulates") {
  Tape tape;
  Var c = tape.constant(Tensor({2}, {5.0, 5.0}));
  Var a = tape.variable(Tensor({2}, {1.0, 2.0}));
  Var loss = sum(add(add(a, a), c));
  CHECK_FALSE(c.requires_grad());
  tape.backward(loss);
  CHECK(tape.grad(a) == Tensor({2}, {2.0, 2.0}));
  CHECK(tape.grad_slot(c.id()) == nullptr);
}

TEST_CASE("parameters are named and unique") {
  Tape tape;
  Var p = tape.parameter("w", Tensor({1}, {2.0}));
  CHECK_THROWS_AS(tape.parameter("w", Tensor({1})), UsageError);
  CHECK(tape.find_parameter("w")->id() == p.id());
  CHECK_FALSE(tape.find_parameter("missing").has_value());
  tape.backward(sum(scale(p, 4.0)));
  CHECK(tape.parameter_grads().at("w")[0] == 4.0);
}

TEST_CASE("mixing tapes is rejected") {
  Tape t1, t2;
  Var a = t1.variable(Tensor({1}));
  Var b = t2.variable(Tensor({1}));
  CHECK_THROWS_AS(add(a, b), UsageError);
}
