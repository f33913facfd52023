#pragma once

#include <functional>
#include <string>
#include <vector>

#include "groundsel/tensor.hpp"

namespace groundsel {

/// Worst element found by a finite-difference comparison.
struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst;  // "param[i]: analytic=... numeric=..."
  bool ok(double threshold = 1e-4) const { return max_rel_err <= threshold; }
};

/// Compares reverse-mode gradients of `loss(graph)` against central
/// differences over every element of `params`. The closure must rebuild the
/// whole computation from the current parameter values each time it is
/// called — it runs once per graph plus twice per parameter element.
///
/// Relative error per element: |analytic - numeric| divided by
/// max(1e-8, |analytic| + |numeric|).
GradCheckResult finite_diff_check(const std::function<Tensor(Graph&)>& loss,
                                  const std::vector<Tensor>& params, double eps = 1e-6);

/// Single-input convenience wrapper.
GradCheckResult finite_diff_check(const std::function<Tensor(Graph&, const Tensor&)>& loss,
                                  const Tensor& x, double eps = 1e-6);

}  // namespace groundsel
