#pragma once

#include <cstddef>
#include <vector>

#include "mcl/tape.hpp"

namespace mcl {

// Row-stochastic N x N matrix; row i distributes condition position i over
// exemplar positions.
struct CorrespondenceMatrix {
  Var t;
  double sharpness = 0.0;

  std::size_t size() const { return t.value().rows(); }
  // Wraps an explicit matrix (e.g. identity or a permutation); throws
  // DimensionError unless square with non-negative rows summing to 1 +- 1e-9.
  static CorrespondenceMatrix from_tensor(Tape& tape, Tensor t);
};

// softmax_rows(cosine(cond, exemplar), sharpness)
CorrespondenceMatrix build_correspondence(Var cond, Var exemplar, double sharpness);

struct WarpResult {
  Var warped;
  std::vector<std::size_t> source_argmax;
};

// T * Z, plus the best exemplar position for every row of T (lowest index on ties).
WarpResult warp(const CorrespondenceMatrix& t, Var z);

// |T^T T Z - Z|_1 with T^T the plain transpose.
Var cycle_loss(const CorrespondenceMatrix& t, Var z);

// |fx - fy|_1
Var feature_consistency_loss(Var fx, Var fy);

// |T Z - Y'|_1
Var pseudo_pair_loss(const CorrespondenceMatrix& t, Var z, Var y_aug);

struct LossWeights {
  double cycle = 1.0;        // lambda_1
  double consistency = 1.0;  // lambda_2
  double contrastive = 1.0;  // lambda_3
  double pseudo = 1.0;       // lambda_6

  // Throws ConfigError on negative or non-finite weights.
  void validate() const;
};

struct ObjectiveParts {
  Var cycle;
  Var consistency;
  Var contrastive;
  Var pseudo;
};

Var correspondence_objective(const ObjectiveParts& parts, const LossWeights& weights);

std::vector<std::size_t> row_argmax(const Tensor& m);

}  // namespace mcl
