#pragma once

#include <string>
#include <vector>

#include "mcl/tape.hpp"

namespace mcl {

// Hyperparameters of the contrastive objectives. The margin is an angle in
// radians added to each positive pair before taking its cosine.
struct ContrastiveConfig {
  double margin = 0.4;
  double scale = 10.0;
  double temperature = 0.1;

  // Throws ConfigError unless 0 <= margin < pi/2, scale > 0, temperature > 0.
  void validate() const;
};

enum class Direction { xy, yx, bidirectional };
std::string to_string(Direction d);

// Summed contrastive loss. `loss` is the differentiable scalar on the tape,
// `value` its numeric value and `per_anchor_terms[i]` the contribution of anchor i.
struct LossReport {
  Var loss;
  double value = 0.0;
  std::vector<double> per_anchor_terms;
  Direction direction = Direction::xy;
};

// InfoNCE with anchors x and spatially aligned positives y; every other row
// of y is a negative. Inputs must be row-normalized [N, C] matrices.
LossReport info_nce(Var x, Var y, double temperature, Direction direction = Direction::xy);

// Sum of two directional reports over the same pair.
LossReport bidirectional(const LossReport& xy, const LossReport& yx);

// InfoNCE on a hypersphere of radius `scale` where each positive angle is
// widened by `margin` before its cosine:
//   theta_ii = arccos(x_i . y_i)          (clamped, see stable_arccos)
//   pos_i    = s * cos(min(theta_ii + m, pi))
//   neg_ij   = s * (x_i . y_j)
//   loss     = sum_i -log(exp(pos_i) / (exp(pos_i) + sum_{j != i} exp(neg_ij)))
LossReport marginal_contrastive(Var x, Var y, const ContrastiveConfig& cfg, Direction direction = Direction::xy);

struct SeparabilityStats {
  double mean_positive_angle = 0.0;
  double mean_negative_angle = 0.0;
};

// Mean stable_arccos angle of aligned pairs and of all i != j pairs.
// Diagnostic only; not recorded on any tape. With N = 1 the negative mean is 0.
SeparabilityStats feature_separability_stats(const Tensor& x, const Tensor& y);

}  // namespace mcl
