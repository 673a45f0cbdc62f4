#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mcl/correspondence.hpp"
#include "mcl/errors.hpp"
#include "mcl/ops.hpp"
#include "oracles.hpp"

using namespace mcl;

namespace {

Tensor permutation_matrix(const std::vector<std::size_t>& p) {
  Tensor t({p.size(), p.size()});
  for (std::size_t i = 0; i < p.size(); ++i) t.at(i, p[i]) = 1.0;
  return t;
}

std::vector<std::size_t> random_permutation(Rng& rng, std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (std::size_t i = n; i-- > 1;) std::swap(p[i], p[rng.below(i + 1)]);
  return p;
}

}  // namespace

TEST_CASE("from_tensor validates stochastic rows") {
  Tape tape;
  CHECK_NOTHROW(CorrespondenceMatrix::from_tensor(tape, Tensor({2, 2}, {0.5, 0.5, 1, 0})));
  CHECK_THROWS_AS(CorrespondenceMatrix::from_tensor(tape, Tensor({2, 2}, {0.5, 0.4, 1, 0})), DimensionError);
  CHECK_THROWS_AS(CorrespondenceMatrix::from_tensor(tape, Tensor({2, 2}, {1.5, -0.5, 1, 0})), DimensionError);
  CHECK_THROWS_AS(CorrespondenceMatrix::from_tensor(tape, Tensor({2, 3}, {1, 0, 0, 1, 0, 0})), DimensionError);
}

TEST_CASE("self match with a sharp softmax approaches identity") {
  Tape tape;
  Tensor e({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  auto t = build_correspondence(tape.constant(e), tape.constant(e), 1000.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(t.t.value().at(i, i) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(row_argmax(t.t.value()) == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("tiny sharpness gives near uniform rows") {
  Rng rng(51);
  Tape tape;
  auto t = build_correspondence(tape.constant(oracle::normalized_rows(rng, 5, 3)),
                                tape.constant(oracle::normalized_rows(rng, 5, 3)), 1e-6);
  for (double v : t.t.value().data()) CHECK(v == doctest::Approx(0.2).epsilon(1e-5));
}

TEST_CASE("correspondence matches the softmax of cosine oracle") {
  Rng rng(53);
  Tensor a = oracle::normalized_rows(rng, 4, 3), b = oracle::normalized_rows(rng, 4, 3);
  Tape tape;
  auto t = build_correspondence(tape.constant(a), tape.constant(b), 7.5);
  for (std::size_t i = 0; i < 4; ++i) {
    double denom = 0.0;
    for (std::size_t j = 0; j < 4; ++j) denom += std::exp(7.5 * oracle::dot(a, i, b, j));
    double row = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(t.t.value().at(i, j) == doctest::Approx(std::exp(7.5 * oracle::dot(a, i, b, j)) / denom).epsilon(1e-12));
      row += t.t.value().at(i, j);
    }
    CHECK(std::abs(row - 1.0) <= 1e-9);
  }
  CHECK_THROWS_AS(build_correspondence(tape.constant(a), tape.constant(Tensor({4, 2})), 1.0), DimensionError);
}

TEST_CASE("argmax does not depend on sharpness") {
  Rng rng(57);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor a = oracle::normalized_rows(rng, 8, 4), b = oracle::normalized_rows(rng, 8, 4);
    Tape tape;
    const auto raw = row_argmax(cosine_similarity_matrix(tape.constant(a), tape.constant(b)).value());
    for (double beta : {0.5, 10.0, 100.0}) {
      CHECK(row_argmax(build_correspondence(tape.constant(a), tape.constant(b), beta).t.value()) == raw);
    }
  }
}

TEST_CASE("joint permutation gives P T P^T") {
  Rng rng(59);
  Tensor a = oracle::normalized_rows(rng, 6, 3), b = oracle::normalized_rows(rng, 6, 3);
  const auto p = random_permutation(rng, 6);
  const Tensor pm = permutation_matrix(p);
  Tape tape;
  Var P = tape.constant(pm);
  const Tensor t = build_correspondence(tape.constant(a), tape.constant(b), 20.0).t.value();
  const Tensor tp = build_correspondence(matmul_tn(P, tape.constant(a)), matmul_tn(P, tape.constant(b)), 20.0).t.value();
  const Tensor expected = matmul_tn(P, matmul(tape.constant(t), P)).value();
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(tp[i] - expected[i]) < 1e-9);
}

TEST_CASE("warp special cases") {
  Rng rng(61);
  Tensor z = oracle::random_tensor(rng, {5, 3});
  Tape tape;
  Tensor eye({5, 5});
  for (std::size_t i = 0; i < 5; ++i) eye.at(i, i) = 1.0;
  CHECK(warp(CorrespondenceMatrix::from_tensor(tape, eye), tape.constant(z)).warped.value() == z);

  const std::vector<std::size_t> p{2, 0, 4, 1, 3};
  const auto w = warp(CorrespondenceMatrix::from_tensor(tape, permutation_matrix(p)), tape.constant(z));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t k = 0; k < 3; ++k) CHECK(w.warped.value().at(i, k) == z.at(p[i], k));
  CHECK(w.source_argmax == p);

  const auto u = warp(CorrespondenceMatrix::from_tensor(tape, Tensor::filled({5, 5}, 0.2)), tape.constant(z));
  for (std::size_t k = 0; k < 3; ++k) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 5; ++i) mean += z.at(i, k) / 5.0;
    for (std::size_t i = 0; i < 5; ++i) CHECK(u.warped.value().at(i, k) == doctest::Approx(mean).epsilon(1e-14));
  }
  CHECK(u.source_argmax == std::vector<std::size_t>(5, 0));
  CHECK_THROWS_AS(warp(CorrespondenceMatrix::from_tensor(tape, eye), tape.constant(Tensor({4, 3}))), DimensionError);
}

TEST_CASE("warp stays inside the exemplar convex hull") {
  Rng rng(67);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor z = oracle::random_tensor(rng, {7, 4});
    Tape tape;
    auto t = build_correspondence(tape.constant(oracle::normalized_rows(rng, 7, 3)),
                                  tape.constant(oracle::normalized_rows(rng, 7, 3)), 30.0);
    const Tensor w = warp(t, tape.constant(z)).warped.value();
    for (std::size_t k = 0; k < 4; ++k) {
      double lo = z.at(0, k), hi = z.at(0, k);
      for (std::size_t i = 1; i < 7; ++i) {
        lo = std::min(lo, z.at(i, k));
        hi = std::max(hi, z.at(i, k));
      }
      for (std::size_t i = 0; i < 7; ++i) {
        CHECK(w.at(i, k) >= lo - 1e-12);
        CHECK(w.at(i, k) <= hi + 1e-12);
      }
    }
  }
}

TEST_CASE("cycle loss vanishes for permutations") {
  Rng rng(71);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng.below(10);
    Tape tape;
    auto t = CorrespondenceMatrix::from_tensor(tape, permutation_matrix(random_permutation(rng, n)));
    CHECK(cycle_loss(t, tape.constant(oracle::random_tensor(rng, {n, 3}))).value().item() <= 1e-12);
  }
}

TEST_CASE("cycle loss with uniform T") {
  Rng rng(73);
  Tensor z = oracle::random_tensor(rng, {4, 2});
  Tape tape;
  // T^T T is again uniform, so every row of T^T T Z is the column mean.
  double expected = 0.0;
  for (std::size_t k = 0; k < 2; ++k) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 4; ++i) mean += z.at(i, k) / 4.0;
    for (std::size_t i = 0; i < 4; ++i) expected += std::abs(mean - z.at(i, k));
  }
  auto t = CorrespondenceMatrix::from_tensor(tape, Tensor::filled({4, 4}, 0.25));
  CHECK(cycle_loss(t, tape.constant(z)).value().item() == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("feature consistency and pseudo pair losses") {
  Rng rng(79);
  Tape tape;
  Tensor f = oracle::random_tensor(rng, {6, 4});
  Tensor shifted = f;
  for (auto& v : shifted.data()) v += 0.5;
  CHECK(feature_consistency_loss(tape.constant(f), tape.constant(f)).value().item() == 0.0);
  CHECK(feature_consistency_loss(tape.constant(shifted), tape.constant(f)).value().item() ==
        doctest::Approx(0.5 * 24).epsilon(1e-13));
  Tensor g = oracle::random_tensor(rng, {6, 4});
  double l1 = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) l1 += std::abs(f[i] - g[i]);
  CHECK(feature_consistency_loss(tape.constant(f), tape.constant(g)).value().item() == doctest::Approx(l1).epsilon(1e-13));
  CHECK_THROWS_AS(feature_consistency_loss(tape.constant(f), tape.constant(Tensor({6, 3}))), DimensionError);

  Tensor eye({6, 6});
  for (std::size_t i = 0; i < 6; ++i) eye.at(i, i) = 1.0;
  auto t = CorrespondenceMatrix::from_tensor(tape, eye);
  CHECK(pseudo_pair_loss(t, tape.constant(f), tape.constant(f)).value().item() == 0.0);

  Tensor tm = Tensor::filled({6, 6}, 1.0 / 6.0);
  auto tu = CorrespondenceMatrix::from_tensor(tape, tm);
  const Tensor warped = matmul(tu.t, tape.constant(f)).value();
  double expected = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) expected += std::abs(warped[i] - g[i]);
  CHECK(pseudo_pair_loss(tu, tape.constant(f), tape.constant(g)).value().item() == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("objective weights") {
  Tape tape;
  ObjectiveParts parts{tape.constant(Tensor::scalar(1.0)), tape.constant(Tensor::scalar(2.0)),
                       tape.constant(Tensor::scalar(3.0)), tape.constant(Tensor::scalar(4.0))};
  CHECK(correspondence_objective(parts, LossWeights{}).value().item() == 10.0);
  CHECK(correspondence_objective(parts, LossWeights{0, 0, 0, 0}).value().item() == 0.0);
  CHECK(correspondence_objective(parts, LossWeights{0, 0, 1, 0}).value().item() == 3.0);
  CHECK_THROWS_AS(LossWeights({-1, 1, 1, 1}).validate(), ConfigError);
}
