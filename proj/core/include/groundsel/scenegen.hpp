#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "groundsel/geometry.hpp"

namespace groundsel {

struct SceneObject {
  Box3 box;
  int64_t category = 0;
  int64_t color = 0;
};

/// One synthetic sample: furniture-like boxes standing on the floor of a
/// unit room, a surface-sampled point cloud, and a template description that
/// picks out exactly one object.
struct Scene {
  int64_t scene_seed = 0;
  std::vector<SceneObject> objects;
  PointCloud points;  // features = RGB
  std::string description;
  int64_t target_index = 0;

  /// True when the target's category occurs exactly once in the scene.
  bool target_is_unique() const;
};

struct SceneConfig {
  int64_t num_points = 2048;
  int64_t min_objects = 4;
  int64_t max_objects = 8;
  double floor_fraction = 0.25;   // share of points landing on the floor
  double color_noise = 0.05;      // uniform per-channel RGB jitter
  double wall_margin = 0.01;      // box clearance from room walls
  double object_gap = 0.02;       // minimum footprint separation
  double relation_margin = 0.05;  // distance gap making near/closest unambiguous
  int64_t min_points_per_object = 64;
};

/// Deterministic scene construction: same (seed, config) gives a bit-identical
/// scene. Placement is rejection-sampled; internal retries are derived from
/// (seed, attempt), and exhausting 1000 attempts raises GenerationError.
/// All emitted coordinates are quantized to 5 decimals so that serialization
/// round-trips exactly.
Scene generate_scene(int64_t seed, const SceneConfig& config = {});

/// Category ids whose name appears as a token of the description.
std::vector<int64_t> mentioned_categories(const std::string& description);

}  // namespace groundsel
