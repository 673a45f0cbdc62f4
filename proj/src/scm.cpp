#include "mcl/scm.hpp"

#include "mcl/errors.hpp"
#include "mcl/ops.hpp"

namespace mcl {

Var compute_scm(Var features) { return gram(features); }

Var project_scm(Var scm, const ScmProjection& proj) {
  const Tensor& s = scm.value();
  const Tensor& w = proj.weight.value();
  if (s.rank() != 2 || s.rows() != s.cols()) {
    throw DimensionError("project_scm: SCM must be square, got " + dims_to_string(s.dims()));
  }
  if (w.rank() != 2 || w.rows() != s.cols()) {
    throw DimensionError("project_scm: weight " + dims_to_string(w.dims()) + " does not accept SCM rows of length " +
                         std::to_string(s.cols()));
  }
  if (proj.bias.value().size() != w.cols()) {
    throw DimensionError("project_scm: bias size " + std::to_string(proj.bias.value().size()) + " vs " +
                         std::to_string(w.cols()) + " outputs");
  }
  return add_row_bias(matmul(scm, proj.weight), proj.bias);
}

Var augment_features(Var base, Var structure, double epsilon) {
  if (base.value().rank() != 2 || structure.value().rank() != 2 ||
      base.value().rows() != structure.value().rows()) {
    throw DimensionError("augment_features: position counts differ (" + dims_to_string(base.value().dims()) +
                         " vs " + dims_to_string(structure.value().dims()) + ")");
  }
  return l2_normalize_rows(concat_cols(base, structure), epsilon);
}

}  // namespace mcl
