#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace groundsel {

/// Axis-aligned box: center plus strictly positive size.
struct Box3 {
  std::array<double, 3> center{0.0, 0.0, 0.0};
  std::array<double, 3> size{1.0, 1.0, 1.0};

  double volume() const { return size[0] * size[1] * size[2]; }
  double lo(int axis) const { return center[axis] - 0.5 * size[axis]; }
  double hi(int axis) const { return center[axis] + 0.5 * size[axis]; }
};

/// Raw scene points: xyz plus F auxiliary channels (RGB by default).
struct PointCloud {
  std::vector<std::array<double, 3>> coords;
  std::vector<std::vector<double>> features;  // per point, length F

  int64_t count() const { return static_cast<int64_t>(coords.size()); }
};

/// Greedy farthest-point sampling starting at index 0: repeatedly add the
/// point with the largest minimum distance to the selected set. Ties break
/// toward the lowest index; output is in selection order.
std::vector<int64_t> farthest_point_sample(const std::vector<std::array<double, 3>>& coords,
                                           int64_t k);

/// For each query point, the indices of its k nearest base points in
/// ascending distance order, ties toward the lowest index.
std::vector<std::vector<int64_t>> knn_group(const std::vector<std::array<double, 3>>& query,
                                            const std::vector<std::array<double, 3>>& base,
                                            int64_t k);

/// Intersection-over-union of two axis-aligned boxes, in [0, 1].
double aabb_iou(const Box3& a, const Box3& b);

/// Closed-boundary inside test: |p - c| <= s/2 on every axis.
std::vector<bool> points_in_box(const std::vector<std::array<double, 3>>& coords, const Box3& box);
bool point_in_box(const std::array<double, 3>& p, const Box3& box);

/// Indices of the k points nearest to box.center, ties toward the lowest index.
std::vector<int64_t> k_closest_to_center(const std::vector<std::array<double, 3>>& coords,
                                         const Box3& box, int64_t k);

double squared_distance(const std::array<double, 3>& a, const std::array<double, 3>& b);

}  // namespace groundsel
