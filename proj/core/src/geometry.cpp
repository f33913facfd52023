#include "groundsel/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "groundsel/error.hpp"

namespace groundsel {

double squared_distance(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

std::vector<int64_t> farthest_point_sample(const std::vector<std::array<double, 3>>& coords,
                                           int64_t k) {
  const int64_t n = static_cast<int64_t>(coords.size());
  if (k < 1 || k > n) {
    throw ContractError("farthest_point_sample: k=" + std::to_string(k) + " outside [1, " +
                        std::to_string(n) + "]");
  }
  std::vector<int64_t> picked;
  picked.reserve(static_cast<size_t>(k));
  picked.push_back(0);
  std::vector<double> min_d2(static_cast<size_t>(n), std::numeric_limits<double>::infinity());
  for (int64_t step = 1; step < k; ++step) {
    const auto& last = coords[static_cast<size_t>(picked.back())];
    int64_t best = -1;
    double best_d2 = -1.0;
    for (int64_t i = 0; i < n; ++i) {
      double& d2 = min_d2[static_cast<size_t>(i)];
      d2 = std::min(d2, squared_distance(coords[static_cast<size_t>(i)], last));
      if (d2 > best_d2) {  // strict >: ties keep the lowest index
        best_d2 = d2;
        best = i;
      }
    }
    picked.push_back(best);
  }
  return picked;
}

std::vector<std::vector<int64_t>> knn_group(const std::vector<std::array<double, 3>>& query,
                                            const std::vector<std::array<double, 3>>& base,
                                            int64_t k) {
  const int64_t m = static_cast<int64_t>(base.size());
  if (k < 1 || k > m) {
    throw ContractError("knn_group: k=" + std::to_string(k) + " outside [1, " + std::to_string(m) +
                        "]");
  }
  std::vector<std::vector<int64_t>> out;
  out.reserve(query.size());
  std::vector<int64_t> idx(static_cast<size_t>(m));
  std::vector<double> d2(static_cast<size_t>(m));
  for (const auto& q : query) {
    std::iota(idx.begin(), idx.end(), 0);
    for (int64_t i = 0; i < m; ++i) d2[static_cast<size_t>(i)] = squared_distance(q, base[static_cast<size_t>(i)]);
    // (distance, index) is a total order, so selecting the first k and then
    // sorting them reproduces the full exhaustive sort's prefix exactly.
    const auto before = [&](int64_t a, int64_t b) {
      if (d2[static_cast<size_t>(a)] != d2[static_cast<size_t>(b)])
        return d2[static_cast<size_t>(a)] < d2[static_cast<size_t>(b)];
      return a < b;
    };
    if (k < m) std::nth_element(idx.begin(), idx.begin() + k, idx.end(), before);
    std::sort(idx.begin(), idx.begin() + k, before);
    out.emplace_back(idx.begin(), idx.begin() + k);
  }
  return out;
}

double aabb_iou(const Box3& a, const Box3& b) {
  double inter = 1.0;
  for (int axis = 0; axis < 3; ++axis) {
    const double lo = std::max(a.lo(axis), b.lo(axis));
    const double hi = std::min(a.hi(axis), b.hi(axis));
    if (hi <= lo) return 0.0;
    inter *= hi - lo;
  }
  return inter / (a.volume() + b.volume() - inter);
}

bool point_in_box(const std::array<double, 3>& p, const Box3& box) {
  for (int axis = 0; axis < 3; ++axis) {
    if (std::abs(p[axis] - box.center[axis]) > 0.5 * box.size[axis]) return false;
  }
  return true;
}

std::vector<bool> points_in_box(const std::vector<std::array<double, 3>>& coords, const Box3& box) {
  std::vector<bool> mask(coords.size());
  for (size_t i = 0; i < coords.size(); ++i) mask[i] = point_in_box(coords[i], box);
  return mask;
}

std::vector<int64_t> k_closest_to_center(const std::vector<std::array<double, 3>>& coords,
                                         const Box3& box, int64_t k) {
  const int64_t n = static_cast<int64_t>(coords.size());
  if (k < 0 || k > n) {
    throw ContractError("k_closest_to_center: k=" + std::to_string(k) + " outside [0, " +
                        std::to_string(n) + "]");
  }
  std::vector<int64_t> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<double> d2(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) d2[static_cast<size_t>(i)] = squared_distance(coords[static_cast<size_t>(i)], box.center);
  std::stable_sort(idx.begin(), idx.end(), [&](int64_t a, int64_t b) {
    if (d2[static_cast<size_t>(a)] != d2[static_cast<size_t>(b)])
      return d2[static_cast<size_t>(a)] < d2[static_cast<size_t>(b)];
    return a < b;
  });
  idx.resize(static_cast<size_t>(k));
  return idx;
}

}  // namespace groundsel
