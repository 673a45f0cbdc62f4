#pragma once

#include "mcl/tape.hpp"

namespace mcl {

// Self-correlation map: row i holds x_i . x_j for every position j of the
// same image, i.e. X X^T. Bitwise symmetric.
Var compute_scm(Var features);

// Learned fully-connected map from a flattened SCM row (length N) to
// `out_dim` structure channels: row_i * weight + bias.
struct ScmProjection {
  Var weight;  // [N, d_proj]
  Var bias;    // [d_proj]

  std::size_t positions() const { return weight.value().rows(); }
  std::size_t out_dim() const { return weight.value().cols(); }
};

Var project_scm(Var scm, const ScmProjection& proj);

// Concatenate base and structure channels per position, then renormalize
// each row so cosine similarity stays bounded.
Var augment_features(Var base, Var structure, double epsilon = 1e-12);

}  // namespace mcl
