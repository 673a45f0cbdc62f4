#pragma once

#include <cstddef>

#include "mcl/tape.hpp"
#include "mcl/tensor.hpp"

// Differentiable primitives. Every op records an exact vector-Jacobian
// product on the tape of its operands; all operands must share one tape.
namespace mcl {

// Clamp applied to arccos inputs: x is restricted to [-1 + d, 1 - d].
inline constexpr double kArccosClamp = 1e-7;

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double factor);
Var sum(Var a);
Var reshape(Var a, Dims dims);

// [n,k] x [k,m]
Var matmul(Var a, Var b);
// [n,k] x [m,k]^T
Var matmul_nt(Var a, Var b);
// [k,n]^T x [k,m]
Var matmul_tn(Var a, Var b);
// a * a^T. Only the upper triangle is computed; the lower one is mirrored so
// the result is bitwise symmetric.
Var gram(Var a);

// [n,d] + broadcast [d]
Var add_row_bias(Var m, Var bias);
// [n,c1] | [n,c2] -> [n,c1+c2]
Var concat_cols(Var a, Var b);

// r / max(|r|_2, epsilon) for every row of a rank-2 tensor.
Var l2_normalize_rows(Var a, double epsilon = 1e-12);

// Entry (i,j) = a_i . b_j. Inputs are expected to be row-normalized.
Var cosine_similarity_matrix(Var a, Var b);

// Row-wise softmax of sharpness * m, max-subtracted.
Var softmax_rows(Var m, double sharpness);

// arccos(clamp(x, -1 + kArccosClamp, 1 - kArccosClamp)).
double stable_arccos(double x);
// -1 / sqrt(1 - c^2) evaluated at the clamped input c.
double stable_arccos_derivative(double x);
Var stable_arccos(Var v);

// Elementwise cos(min(theta + margin, pi)).
Var margin_cosine(Var theta, double margin);

// margin_cosine(stable_arccos(c), margin) written as c cos m - sin(theta) sin m,
// so margin = 0 returns c unchanged. sin(theta) uses the clamped c; past the
// pi cap the value is -1 with zero slope.
Var angular_margin(Var c, double margin);

// [n,n] -> [n]
Var diagonal(Var m);
// Copy of m with its diagonal taken from d.
Var replace_diagonal(Var m, Var d);

// Per-row cross-entropy against the diagonal target:
//   t_i = log(sum_j exp(l_ij)) - l_ii.
Var nce_terms(Var logits);

// sum |a - b| over all elements.
Var l1_distance(Var a, Var b);

Var leaky_relu(Var a, double slope);

// input [H,W,Cin], kernel [k,k,Cin,Cout], bias [Cout]; zero padding (k-1)/2.
// Output extent per axis is (H + 2p - k) / stride + 1.
Var conv2d(Var input, Var kernel, Var bias, std::size_t stride);

}  // namespace mcl
