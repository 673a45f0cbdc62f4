#include "mcl/contrastive.hpp"

#include <cmath>
#include <numbers>
#include <utility>

#include "mcl/errors.hpp"
#include "mcl/ops.hpp"

namespace mcl {

void ContrastiveConfig::validate() const {
  if (!(margin >= 0.0 && margin < std::numbers::pi / 2)) {
    throw ConfigError("margin must lie in [0, pi/2), got " + std::to_string(margin));
  }
  if (!(scale > 0.0)) throw ConfigError("scale must be > 0, got " + std::to_string(scale));
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0, got " + std::to_string(temperature));
}

std::string to_string(Direction d) {
  switch (d) {
    case Direction::xy: return "xy";
    case Direction::yx: return "yx";
    case Direction::bidirectional: return "bidirectional";
  }
  return "?";
}

namespace {

void check_pair(Var x, Var y) {
  const Tensor& xv = x.value();
  const Tensor& yv = y.value();
  if (xv.rank() != 2 || xv.dims() != yv.dims()) {
    throw DimensionError("contrastive loss needs equal [N, C] grids, got " + dims_to_string(xv.dims()) + " and " +
                         dims_to_string(yv.dims()));
  }
}

LossReport finish(Var terms, Direction direction) {
  LossReport r;
  r.loss = sum(terms);
  r.value = r.loss.value().item();
  r.per_anchor_terms = terms.value().storage();
  r.direction = direction;
  return r;
}

}  // namespace

LossReport info_nce(Var x, Var y, double temperature, Direction direction) {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  check_pair(x, y);
  if (direction == Direction::bidirectional) {
    return bidirectional(info_nce(x, y, temperature, Direction::xy), info_nce(x, y, temperature, Direction::yx));
  }
  if (direction == Direction::yx) std::swap(x, y);
  Var logits = scale(cosine_similarity_matrix(x, y), 1.0 / temperature);
  return finish(nce_terms(logits), direction);
}

LossReport bidirectional(const LossReport& xy, const LossReport& yx) {
  if (xy.per_anchor_terms.size() != yx.per_anchor_terms.size()) {
    throw DimensionError("bidirectional: reports cover different anchor counts");
  }
  LossReport r;
  r.loss = add(xy.loss, yx.loss);
  r.value = r.loss.value().item();
  r.per_anchor_terms.resize(xy.per_anchor_terms.size());
  for (std::size_t i = 0; i < r.per_anchor_terms.size(); ++i) {
    r.per_anchor_terms[i] = xy.per_anchor_terms[i] + yx.per_anchor_terms[i];
  }
  r.direction = Direction::bidirectional;
  return r;
}

LossReport marginal_contrastive(Var x, Var y, const ContrastiveConfig& cfg, Direction direction) {
  cfg.validate();
  check_pair(x, y);
  if (direction == Direction::bidirectional) {
    return bidirectional(marginal_contrastive(x, y, cfg, Direction::xy), marginal_contrastive(x, y, cfg, Direction::yx));
  }
  if (direction == Direction::yx) std::swap(x, y);
  Var cosines = cosine_similarity_matrix(x, y);
  Var positive = scale(angular_margin(diagonal(cosines), cfg.margin), cfg.scale);
  Var logits = replace_diagonal(scale(cosines, cfg.scale), positive);
  return finish(nce_terms(logits), direction);
}

SeparabilityStats feature_separability_stats(const Tensor& x, const Tensor& y) {
  if (x.rank() != 2 || x.dims() != y.dims()) {
    throw DimensionError("feature_separability_stats needs equal [N, C] grids");
  }
  const std::size_t n = x.rows(), c = x.cols();
  double pos = 0.0, neg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < c; ++k) dot += x.at(i, k) * y.at(j, k);
      (i == j ? pos : neg) += stable_arccos(dot);
    }
  }
  SeparabilityStats s;
  s.mean_positive_angle = pos / static_cast<double>(n);
  s.mean_negative_angle = n > 1 ? neg / static_cast<double>(n * (n - 1)) : 0.0;
  return s;
}

}  // namespace mcl
