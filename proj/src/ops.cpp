#include "mcl/ops.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mcl/errors.hpp"

namespace mcl {
namespace {

Tape& same_tape(Var a, Var b) {
  if (!a.tape() || a.tape() != b.tape()) throw UsageError("operands live on different tapes");
  return *a.tape();
}

void require_rank2(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(what) + " needs a rank-2 tensor, got " + dims_to_string(t.dims()));
  }
}

void require_same_dims(const Tensor& a, const Tensor& b, const char* what) {
  if (a.dims() != b.dims()) {
    throw DimensionError(std::string(what) + ": dims " + dims_to_string(a.dims()) + " vs " +
                         dims_to_string(b.dims()));
  }
}

// One BLAS thread keeps every summation order fixed across machines.
void pin_blas_threads() {
  static const bool pinned = (openblas_set_num_threads(1), true);
  (void)pinned;
}

// out[n,m] += a[n,k] * b[k,m]
void gemm_nn(const double* a, const double* b, double* out, std::size_t n, std::size_t k, std::size_t m) {
  if (n == 0 || m == 0 || k == 0) return;
  pin_blas_threads();
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, int(n), int(m), int(k), 1.0, a, int(k), b, int(m), 1.0, out, int(m));
}

// out[n,m] += a[n,k] * b[m,k]^T
void gemm_nt(const double* a, const double* b, double* out, std::size_t n, std::size_t k, std::size_t m) {
  if (n == 0 || m == 0 || k == 0) return;
  pin_blas_threads();
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, int(n), int(m), int(k), 1.0, a, int(k), b, int(k), 1.0, out, int(m));
}

// out[n,m] += a[k,n]^T * b[k,m]
void gemm_tn(const double* a, const double* b, double* out, std::size_t n, std::size_t k, std::size_t m) {
  if (n == 0 || m == 0 || k == 0) return;
  pin_blas_threads();
  cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, int(n), int(m), int(k), 1.0, a, int(n), b, int(m), 1.0, out, int(m));
}

}  // namespace

Var add(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_same_dims(a.value(), b.value(), "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  const auto ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {a, b}, [ia, ib](Tape& t, const Tensor& g) {
    for (auto id : {ia, ib}) {
      if (Tensor* ga = t.grad_slot(id))
        for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    }
  });
}

Var sub(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_same_dims(a.value(), b.value(), "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  const auto ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {a, b}, [ia, ib](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_slot(ia))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    if (Tensor* gb = t.grad_slot(ib))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
  });
}

Var scale(Var a, double factor) {
  Tensor out = a.value();
  for (auto& v : out.storage()) v *= factor;
  const auto ia = a.id();
  return a.tape()->record(std::move(out), {a}, [ia, factor](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_slot(ia))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += factor * g[i];
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const auto ia = a.id();
  return a.tape()->record(Tensor::scalar(s), {a}, [ia](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_slot(ia))
      for (auto& v : ga->storage()) v += g[0];
  });
}

Var reshape(Var a, Dims dims) {
  Tensor out = a.value().reshaped(std::move(dims));
  const auto ia = a.id();
  return a.tape()->record(std::move(out), {a}, [ia](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_slot(ia))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
  });
}

Var matmul(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "matmul");
  require_rank2(bv, "matmul");
  if (av.cols() != bv.rows()) {
    throw DimensionError("matmul: " + dims_to_string(av.dims()) + " x " + dims_to_string(bv.dims()));
  }
  const std::size_t n = av.rows(), k = av.cols(), m = bv.cols();
  Tensor out({n, m});
  gemm_nn(av.data().data(), bv.data().data(), out.data().data(), n, k, m);
  const auto ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {a, b}, [ia, ib, n, k, m](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(ia);
    const Tensor& bv = t.value(ib);
    // dA = G B^T, dB = A^T G
    if (Tensor* ga = t.grad_slot(ia)) gemm_nt(g.data().data(), bv.data().data(), ga->data().data(), n, m, k);
    if (Tensor* gb = t.grad_slot(ib)) gemm_tn(av.data().data(), g.data().data(), gb->data().data(), k, n, m);
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "matmul_nt");
  require_rank2(bv, "matmul_nt");
  if (av.cols() != bv.cols()) {
    throw DimensionError("matmul_nt: " + dims_to_string(av.dims()) + " x " + dims_to_string(bv.dims()) + "^T");
  }
  const std::size_t n = av.rows(), k = av.cols(), m = bv.rows();
  Tensor out({n, m});
  gemm_nt(av.data().data(), bv.data().data(), out.data().data(), n, k, m);
  const auto ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {a, b}, [ia, ib, n, k, m](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(ia);
    const Tensor& bv = t.value(ib);
    // dA = G B, dB = G^T A
    if (Tensor* ga = t.grad_slot(ia)) gemm_nn(g.data().data(), bv.data().data(), ga->data().data(), n, m, k);
    if (Tensor* gb = t.grad_slot(ib)) gemm_tn(g.data().data(), av.data().data(), gb->data().data(), m, n, k);
  });
}

Var matmul_tn(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "matmul_tn");
  require_rank2(bv, "matmul_tn");
  if (av.rows() != bv.rows()) {
    throw DimensionError("matmul_tn: " + dims_to_string(av.dims()) + "^T x " + dims_to_string(bv.dims()));
  }
  const std::size_t k = av.rows(), n = av.cols(), m = bv.cols();
  Tensor out({n, m});
  gemm_tn(av.data().data(), bv.data().data(), out.data().data(), n, k, m);
  const auto ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {a, b}, [ia, ib, n, k, m](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(ia);
    const Tensor& bv = t.value(ib);
    // dA = B G^T, dB = A G
    if (Tensor* ga = t.grad_slot(ia)) gemm_nt(bv.data().data(), g.data().data(), ga->data().data(), k, m, n);
    if (Tensor* gb = t.grad_slot(ib)) gemm_nn(av.data().data(), g.data().data(), gb->data().data(), k, n, m);
  });
}

Var gram(Var a) {
  const Tensor& av = a.value();
  require_rank2(av, "gram");
  const std::size_t n = av.rows(), c = av.cols();
  Tensor out({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    const auto ri = av.row(i);
    for (std::size_t j = i; j < n; ++j) {
      const auto rj = av.row(j);
      double s = 0.0;
      for (std::size_t p = 0; p < c; ++p) s += ri[p] * rj[p];
      out.at(i, j) = s;
      out.at(j, i) = s;
    }
  }
  const auto ia = a.id();
  return a.tape()->record(std::move(out), {a}, [ia, n, c](Tape& t, const Tensor& g) {
    Tensor* ga = t.grad_slot(ia);
    if (!ga) return;
    const Tensor& av = t.value(ia);
    // dA = (G + G^T) A
    Tensor sym({n, n});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) sym.at(i, j) = g.at(i, j) + g.at(j, i);
    gemm_nn(sym.data().data(), av.data().data(), ga->data().data(), n, n, c);
  });
}

Var add_row_bias(Var m, Var bias) {
  Tape& tape = same_tape(m, bias);
  const Tensor& mv = m.value();
  const Tensor& bv = bias.value();
  require_rank2(mv, "add_row_bias");
  if (bv.size() != mv.cols()) {
    throw DimensionError("add_row_bias: bias of size " + std::to_string(bv.size()) + " for " +
                         std::to_string(mv.cols()) + " columns");
  }
  Tensor out = mv;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out.at(r, c) += bv[c];
  const auto im = m.id(), ib = bias.id();
  return tape.record(std::move(out), {m, bias}, [im, ib](Tape& t, const Tensor& g) {
    if (Tensor* gm = t.grad_slot(im))
      for (std::size_t i = 0; i < g.size(); ++i) (*gm)[i] += g[i];
    if (Tensor* gb = t.grad_slot(ib)) {
      const std::size_t cols = g.cols();
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < cols; ++c) (*gb)[c] += g.at(r, c);
    }
  });
}

Var concat_cols(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "concat_cols");
  require_rank2(bv, "concat_cols");
  if (av.rows() != bv.rows()) {
    throw DimensionError("concat_cols: row counts " + std::to_string(av.rows()) + " vs " +
                         std::to_string(bv.rows()));
  }
  const std::size_t n = av.rows(), ca = av.cols(), cb = bv.cols();
  Tensor out({n, ca + cb});
  for (std::size_t r = 0; r < n; ++r) {
    std::copy_n(av.row(r).begin(), ca, out.row(r).begin());
    std::copy_n(bv.row(r).begin(), cb, out.row(r).begin() + ca);
  }
  const auto ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {a, b}, [ia, ib, n, ca, cb](Tape& t, const Tensor& g) {
    Tensor* ga = t.grad_slot(ia);
    Tensor* gb = t.grad_slot(ib);
    for (std::size_t r = 0; r < n; ++r) {
      const auto gr = g.row(r);
      if (ga)
        for (std::size_t c = 0; c < ca; ++c) ga->at(r, c) += gr[c];
      if (gb)
        for (std::size_t c = 0; c < cb; ++c) gb->at(r, c) += gr[ca + c];
    }
  });
}

Var l2_normalize_rows(Var a, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("l2_normalize_rows: epsilon must be > 0");
  const Tensor& av = a.value();
  require_rank2(av, "l2_normalize_rows");
  const std::size_t n = av.rows(), c = av.cols();
  Tensor out({n, c});
  std::vector<double> denom(n);
  std::vector<bool> clipped(n);
  for (std::size_t r = 0; r < n; ++r) {
    double ss = 0.0;
    for (double v : av.row(r)) ss += v * v;
    const double norm = std::sqrt(ss);
    clipped[r] = !(norm > epsilon);
    denom[r] = clipped[r] ? epsilon : norm;
    for (std::size_t k = 0; k < c; ++k) out.at(r, k) = av.at(r, k) / denom[r];
  }
  const auto ia = a.id();
  Tensor saved = out;
  return a.tape()->record(
      std::move(out), {a},
      [ia, n, c, y = std::move(saved), denom = std::move(denom), clipped = std::move(clipped)](Tape& t,
                                                                                            const Tensor& g) {
        Tensor* ga = t.grad_slot(ia);
        if (!ga) return;
        for (std::size_t r = 0; r < n; ++r) {
          const auto gr = g.row(r);
          if (clipped[r]) {
            for (std::size_t k = 0; k < c; ++k) ga->at(r, k) += gr[k] / denom[r];
            continue;
          }
          // (I - y y^T) g / |r|
          const auto yr = y.row(r);
          double dot = 0.0;
          for (std::size_t k = 0; k < c; ++k) dot += yr[k] * gr[k];
          for (std::size_t k = 0; k < c; ++k) ga->at(r, k) += (gr[k] - yr[k] * dot) / denom[r];
        }
      });
}

Var cosine_similarity_matrix(Var a, Var b) {
  require_rank2(a.value(), "cosine_similarity_matrix");
  require_rank2(b.value(), "cosine_similarity_matrix");
  if (a.value().cols() != b.value().cols()) {
    throw DimensionError("cosine_similarity_matrix: channel mismatch " + std::to_string(a.value().cols()) +
                         " vs " + std::to_string(b.value().cols()));
  }
  return matmul_nt(a, b);
}

Var softmax_rows(Var m, double sharpness) {
  if (!(sharpness > 0.0)) throw ConfigError("softmax_rows: sharpness must be > 0");
  const Tensor& mv = m.value();
  require_rank2(mv, "softmax_rows");
  const std::size_t n = mv.rows(), cols = mv.cols();
  Tensor out({n, cols});
  for (std::size_t r = 0; r < n; ++r) {
    const auto in = mv.row(r);
    auto o = out.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t k = 0; k < cols; ++k) {
      o[k] = std::exp(sharpness * (in[k] - mx));
      z += o[k];
    }
    for (auto& v : o) v /= z;
  }
  const auto im = m.id();
  Tensor saved = out;
  return m.tape()->record(std::move(out), {m}, [im, n, cols, sharpness, p = std::move(saved)](Tape& t,
                                                                                              const Tensor& g) {
    Tensor* gm = t.grad_slot(im);
    if (!gm) return;
    for (std::size_t r = 0; r < n; ++r) {
      const auto pr = p.row(r);
      const auto gr = g.row(r);
      double dot = 0.0;
      for (std::size_t k = 0; k < cols; ++k) dot += pr[k] * gr[k];
      for (std::size_t k = 0; k < cols; ++k) gm->at(r, k) += sharpness * pr[k] * (gr[k] - dot);
    }
  });
}

namespace {
double clamp_unit(double x) { return std::clamp(x, -1.0 + kArccosClamp, 1.0 - kArccosClamp); }
}  // namespace

double stable_arccos(double x) { return std::acos(clamp_unit(x)); }

double stable_arccos_derivative(double x) {
  const double c = clamp_unit(x);
  return -1.0 / std::sqrt(1.0 - c * c);
}

Var stable_arccos(Var v) {
  Tensor out = v.value();
  for (auto& x : out.storage()) x = stable_arccos(x);
  const auto iv = v.id();
  return v.tape()->record(std::move(out), {v}, [iv](Tape& t, const Tensor& g) {
    Tensor* gv = t.grad_slot(iv);
    if (!gv) return;
    const Tensor& x = t.value(iv);
    for (std::size_t i = 0; i < g.size(); ++i) (*gv)[i] += g[i] * stable_arccos_derivative(x[i]);
  });
}

Var margin_cosine(Var theta, double margin) {
  Tensor out = theta.value();
  for (auto& x : out.storage()) x = std::cos(std::min(x + margin, std::numbers::pi));
  const auto it = theta.id();
  return theta.tape()->record(std::move(out), {theta}, [it, margin](Tape& t, const Tensor& g) {
    Tensor* gt = t.grad_slot(it);
    if (!gt) return;
    const Tensor& th = t.value(it);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double shifted = th[i] + margin;
      if (shifted < std::numbers::pi) (*gt)[i] -= g[i] * std::sin(shifted);
    }
  });
}

Var angular_margin(Var c, double margin) {
  const double cm = std::cos(margin), sm = std::sin(margin);
  Tensor out = c.value();
  for (auto& x : out.storage()) {
    const double k = clamp_unit(x);
    x = std::acos(k) + margin >= std::numbers::pi ? -1.0 : x * cm - std::sqrt(1.0 - k * k) * sm;
  }
  const auto ic = c.id();
  return c.tape()->record(std::move(out), {c}, [ic, margin, cm, sm](Tape& t, const Tensor& g) {
    Tensor* gc = t.grad_slot(ic);
    if (!gc) return;
    const Tensor& cv = t.value(ic);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double k = clamp_unit(cv[i]);
      if (std::acos(k) + margin < std::numbers::pi) (*gc)[i] += g[i] * (cm + k / std::sqrt(1.0 - k * k) * sm);
    }
  });
}

Var diagonal(Var m) {
  const Tensor& mv = m.value();
  require_rank2(mv, "diagonal");
  if (mv.rows() != mv.cols()) throw DimensionError("diagonal needs a square matrix");
  const std::size_t n = mv.rows();
  Tensor out({n});
  for (std::size_t i = 0; i < n; ++i) out[i] = mv.at(i, i);
  const auto im = m.id();
  return m.tape()->record(std::move(out), {m}, [im, n](Tape& t, const Tensor& g) {
    if (Tensor* gm = t.grad_slot(im))
      for (std::size_t i = 0; i < n; ++i) gm->at(i, i) += g[i];
  });
}

Var replace_diagonal(Var m, Var d) {
  Tape& tape = same_tape(m, d);
  const Tensor& mv = m.value();
  require_rank2(mv, "replace_diagonal");
  const std::size_t n = mv.rows();
  if (mv.cols() != n || d.value().size() != n) {
    throw DimensionError("replace_diagonal: matrix " + dims_to_string(mv.dims()) + " with diagonal of size " +
                         std::to_string(d.value().size()));
  }
  Tensor out = mv;
  for (std::size_t i = 0; i < n; ++i) out.at(i, i) = d.value()[i];
  const auto im = m.id(), id = d.id();
  return tape.record(std::move(out), {m, d}, [im, id, n](Tape& t, const Tensor& g) {
    if (Tensor* gm = t.grad_slot(im)) {
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
          if (r != c) gm->at(r, c) += g.at(r, c);
    }
    if (Tensor* gd = t.grad_slot(id))
      for (std::size_t i = 0; i < n; ++i) (*gd)[i] += g.at(i, i);
  });
}

Var nce_terms(Var logits) {
  const Tensor& lv = logits.value();
  require_rank2(lv, "nce_terms");
  const std::size_t n = lv.rows();
  if (lv.cols() != n) throw DimensionError("nce_terms needs a square logit matrix");
  Tensor out({n});
  Tensor prob({n, n});
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = lv.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      prob.at(r, c) = std::exp(row[c] - mx);
      z += prob.at(r, c);
    }
    for (std::size_t c = 0; c < n; ++c) prob.at(r, c) /= z;
    out[r] = (mx + std::log(z)) - row[r];
  }
  const auto il = logits.id();
  return logits.tape()->record(std::move(out), {logits}, [il, n, p = std::move(prob)](Tape& t, const Tensor& g) {
    Tensor* gl = t.grad_slot(il);
    if (!gl) return;
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) gl->at(r, c) += g[r] * p.at(r, c);
      gl->at(r, r) -= g[r];
    }
  });
}

Var l1_distance(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_same_dims(a.value(), b.value(), "l1_distance");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += std::abs(av[i] - bv[i]);
  const auto ia = a.id(), ib = b.id();
  return tape.record(Tensor::scalar(s), {a, b}, [ia, ib](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(ia);
    const Tensor& bv = t.value(ib);
    Tensor* ga = t.grad_slot(ia);
    Tensor* gb = t.grad_slot(ib);
    for (std::size_t i = 0; i < av.size(); ++i) {
      const double d = av[i] - bv[i];
      const double sg = d > 0.0 ? g[0] : (d < 0.0 ? -g[0] : 0.0);
      if (ga) (*ga)[i] += sg;
      if (gb) (*gb)[i] -= sg;
    }
  });
}

Var leaky_relu(Var a, double slope) {
  Tensor out = a.value();
  for (auto& x : out.storage())
    if (x < 0.0) x *= slope;
  const auto ia = a.id();
  return a.tape()->record(std::move(out), {a}, [ia, slope](Tape& t, const Tensor& g) {
    Tensor* ga = t.grad_slot(ia);
    if (!ga) return;
    const Tensor& x = t.value(ia);
    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += x[i] < 0.0 ? slope * g[i] : g[i];
  });
}

Var conv2d(Var input, Var kernel, Var bias, std::size_t stride) {
  Tape& tape = same_tape(input, kernel);
  same_tape(input, bias);
  const Tensor& x = input.value();
  const Tensor& w = kernel.value();
  const Tensor& b = bias.value();
  if (x.rank() != 3 || w.rank() != 4) {
    throw DimensionError("conv2d: input must be [H,W,C] and kernel [k,k,Cin,Cout], got " + dims_to_string(x.dims()) +
                         " and " + dims_to_string(w.dims()));
  }
  const std::size_t h = x.dim(0), wd = x.dim(1), cin = x.dim(2);
  const std::size_t k = w.dim(0), cout = w.dim(3);
  if (w.dim(1) != k || w.dim(2) != cin || b.size() != cout || stride == 0) {
    throw DimensionError("conv2d: kernel " + dims_to_string(w.dims()) + " / bias " + dims_to_string(b.dims()) +
                         " incompatible with input " + dims_to_string(x.dims()));
  }
  const std::size_t pad = (k - 1) / 2;
  if (h + 2 * pad < k || wd + 2 * pad < k) throw DimensionError("conv2d: input smaller than kernel");
  const std::size_t oh = (h + 2 * pad - k) / stride + 1;
  const std::size_t ow = (wd + 2 * pad - k) / stride + 1;

  // Patch rows [oh*ow, k*k*cin] against the kernel viewed as [k*k*cin, cout].
  const std::size_t rows = oh * ow, depth = k * k * cin;
  auto patch_offset = [=](std::size_t r, std::size_t ky, std::size_t kx) -> std::ptrdiff_t {
    const auto iy = static_cast<std::ptrdiff_t>((r / ow) * stride + ky) - static_cast<std::ptrdiff_t>(pad);
    const auto ix = static_cast<std::ptrdiff_t>((r % ow) * stride + kx) - static_cast<std::ptrdiff_t>(pad);
    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h) || ix < 0 || ix >= static_cast<std::ptrdiff_t>(wd)) return -1;
    return (iy * static_cast<std::ptrdiff_t>(wd) + ix) * static_cast<std::ptrdiff_t>(cin);
  };
  std::vector<double> cols(rows * depth, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t ky = 0; ky < k; ++ky)
      for (std::size_t kx = 0; kx < k; ++kx) {
        const auto off = patch_offset(r, ky, kx);
        if (off < 0) continue;
        std::copy_n(x.data().data() + off, cin, cols.data() + r * depth + (ky * k + kx) * cin);
      }

  Tensor out({oh, ow, cout});
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(b.data().data(), cout, out.data().data() + r * cout);
  gemm_nn(cols.data(), w.data().data(), out.data().data(), rows, depth, cout);

  const auto ix_id = input.id(), iw = kernel.id(), ib = bias.id();
  return tape.record(std::move(out), {input, kernel, bias},
                     [=, cols = std::move(cols)](Tape& t, const Tensor& g) {
                       const Tensor& w = t.value(iw);
                       if (Tensor* gb = t.grad_slot(ib)) {
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t co = 0; co < cout; ++co) (*gb)[co] += g[r * cout + co];
                       }
                       if (Tensor* gw = t.grad_slot(iw)) gemm_tn(cols.data(), g.data().data(), gw->data().data(), depth, rows, cout);
                       Tensor* gx = t.grad_slot(ix_id);
                       if (!gx) return;
                       std::vector<double> gcols(rows * depth, 0.0);
                       gemm_nt(g.data().data(), w.data().data(), gcols.data(), rows, cout, depth);
                       for (std::size_t r = 0; r < rows; ++r)
                         for (std::size_t ky = 0; ky < k; ++ky)
                           for (std::size_t kx = 0; kx < k; ++kx) {
                             const auto off = patch_offset(r, ky, kx);
                             if (off < 0) continue;
                             const double* src = gcols.data() + r * depth + (ky * k + kx) * cin;
                             double* dst = gx->data().data() + off;
                             for (std::size_t ci = 0; ci < cin; ++ci) dst[ci] += src[ci];
                           }
                     });
}

}  // namespace mcl
