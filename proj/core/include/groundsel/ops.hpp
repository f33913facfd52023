#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "groundsel/tensor.hpp"

namespace groundsel {

// Reverse-mode primitives. Every op runs eagerly, and when the graph is
// recording and an input tracks gradients, appends one pull node to it.
// Inputs are never mutated; outputs on finite inputs are finite.

/// Standard matrix product [m x k] * [k x n] -> [m x n].
Tensor matmul(Graph& g, const Tensor& a, const Tensor& b);
Tensor transpose(Graph& g, const Tensor& a);

Tensor add(Graph& g, const Tensor& a, const Tensor& b);
Tensor sub(Graph& g, const Tensor& a, const Tensor& b);
Tensor mul(Graph& g, const Tensor& a, const Tensor& b);
/// Elementwise mul * x + shift.
Tensor affine(Graph& g, const Tensor& x, double mul, double shift);
inline Tensor scale(Graph& g, const Tensor& x, double s) { return affine(g, x, s, 0.0); }
inline Tensor neg(Graph& g, const Tensor& x) { return affine(g, x, -1.0, 0.0); }

Tensor relu(Graph& g, const Tensor& x);
Tensor sigmoid(Graph& g, const Tensor& x);
Tensor exp_op(Graph& g, const Tensor& x);
/// Natural log with the input clamped below at 1e-12.
Tensor log_op(Graph& g, const Tensor& x);
/// x^p for strictly positive x.
Tensor pow_scalar(Graph& g, const Tensor& x, double p);
Tensor abs_op(Graph& g, const Tensor& x);
/// Clamp to [lo, hi]; gradient passes only where the input is strictly inside.
Tensor clamp(Graph& g, const Tensor& x, double lo, double hi);

/// Softmax along the last axis, computed with max-subtraction.
Tensor softmax(Graph& g, const Tensor& x);
/// Normalizes the last axis to zero mean / unit variance, then applies
/// elementwise gain and bias (both of last-axis length).
Tensor layer_norm(Graph& g, const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);

/// Concatenation along the last axis; all other dims must agree.
Tensor concat(Graph& g, const std::vector<Tensor>& parts);
/// Selects rows (axis 0); gradients accumulate only into the gathered rows.
Tensor gather_rows(Graph& g, const Tensor& x, std::span<const int64_t> rows);
/// Repeats a length-n vector across m rows -> [m x n].
Tensor broadcast_rows(Graph& g, const Tensor& v, int64_t m);
Tensor reshape(Graph& g, const Tensor& x, std::vector<int64_t> shape);

/// Removes `axis` by taking the maximum. Ties resolve to the lowest index,
/// which also receives the whole gradient.
Tensor reduce_max(Graph& g, const Tensor& x, int axis);
Tensor reduce_mean(Graph& g, const Tensor& x, int axis);
/// Sum of all elements -> single-element tensor.
Tensor sum_all(Graph& g, const Tensor& x);
inline Tensor mean_all(Graph& g, const Tensor& x) {
  return affine(g, sum_all(g, x), 1.0 / static_cast<double>(x.size()), 0.0);
}

/// Indices of the k largest values, ordered by descending value with ties
/// broken toward the lowest index. Pure index selection: no gradient path.
std::vector<int64_t> argtopk(std::span<const double> values, int64_t k);

}  // namespace groundsel
