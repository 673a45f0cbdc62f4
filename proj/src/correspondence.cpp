#include "mcl/correspondence.hpp"

#include <cmath>

#include "mcl/errors.hpp"
#include "mcl/ops.hpp"

namespace mcl {

CorrespondenceMatrix CorrespondenceMatrix::from_tensor(Tape& tape, Tensor t) {
  if (t.rank() != 2 || t.rows() != t.cols()) {
    throw DimensionError("correspondence matrix must be square, got " + dims_to_string(t.dims()));
  }
  for (std::size_t r = 0; r < t.rows(); ++r) {
    double s = 0.0;
    for (double v : t.row(r)) {
      if (v < 0.0) throw DimensionError("correspondence matrix has a negative entry in row " + std::to_string(r));
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) {
      throw DimensionError("correspondence matrix row " + std::to_string(r) + " sums to " + std::to_string(s));
    }
  }
  return {tape.constant(std::move(t)), 0.0};
}

CorrespondenceMatrix build_correspondence(Var cond, Var exemplar, double sharpness) {
  return {softmax_rows(cosine_similarity_matrix(cond, exemplar), sharpness), sharpness};
}

std::vector<std::size_t> row_argmax(const Tensor& m) {
  if (m.rank() != 2) throw DimensionError("row_argmax needs a rank-2 tensor");
  std::vector<std::size_t> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c)
      if (row[c] > row[best]) best = c;
    out[r] = best;
  }
  return out;
}

namespace {
void check_rows(const CorrespondenceMatrix& t, Var z, const char* what) {
  if (z.value().rank() != 2 || z.value().rows() != t.size()) {
    throw DimensionError(std::string(what) + ": T is " + std::to_string(t.size()) + "x" + std::to_string(t.size()) +
                         " but Z is " + dims_to_string(z.value().dims()));
  }
}
}  // namespace

WarpResult warp(const CorrespondenceMatrix& t, Var z) {
  check_rows(t, z, "warp");
  return {matmul(t.t, z), row_argmax(t.t.value())};
}

Var cycle_loss(const CorrespondenceMatrix& t, Var z) {
  check_rows(t, z, "cycle_loss");
  // T^T (T Z) keeps the cost at O(N^2 C).
  return l1_distance(matmul_tn(t.t, matmul(t.t, z)), z);
}

Var feature_consistency_loss(Var fx, Var fy) { return l1_distance(fx, fy); }

Var pseudo_pair_loss(const CorrespondenceMatrix& t, Var z, Var y_aug) {
  check_rows(t, z, "pseudo_pair_loss");
  return l1_distance(matmul(t.t, z), y_aug);
}

void LossWeights::validate() const {
  for (double w : {cycle, consistency, contrastive, pseudo}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("loss weights must be finite and >= 0");
  }
}

Var correspondence_objective(const ObjectiveParts& parts, const LossWeights& weights) {
  weights.validate();
  Var total = scale(parts.cycle, weights.cycle);
  total = add(total, scale(parts.consistency, weights.consistency));
  total = add(total, scale(parts.contrastive, weights.contrastive));
  total = add(total, scale(parts.pseudo, weights.pseudo));
  return total;
}

}  // namespace mcl
