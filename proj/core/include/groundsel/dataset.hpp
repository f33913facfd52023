#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "groundsel/geometry.hpp"
#include "groundsel/scenegen.hpp"

namespace groundsel {

/// One-scene-per-line structured text file with a schema-version header.
/// Coordinates are stored as plain decimals; because scene generation
/// quantizes to 5 decimals, read(write(scenes)) reproduces every value
/// bit-exactly.
void write_dataset(const std::string& path, const std::vector<Scene>& scenes);
std::vector<Scene> read_dataset(const std::string& path);

/// Geometry of the backbone's sampling plan plus loss-label construction —
/// everything about a scene that does not depend on model parameters.
struct PrepareConfig {
  int64_t sa1_points = 2048;
  int64_t sa2_points = 1024;
  int64_t neighbors = 8;
  int64_t k0 = 512;  // size of the FPS probe baseline
  int64_t k2 = 5;    // per-object closest-to-center count for s_o labels
};

struct PreparedScene {
  Scene scene;
  std::vector<int64_t> tokens;

  // Backbone sampling plan: stage-1 centers index the raw cloud; stage-2
  // centers index stage-1 rows. Neighbor lists likewise.
  std::vector<int64_t> sa1_centers;
  std::vector<std::vector<int64_t>> sa1_neighbors;
  std::vector<int64_t> sa2_centers;
  std::vector<std::vector<int64_t>> sa2_neighbors;
  std::vector<std::array<double, 3>> seed_coords;  // sa2 center coordinates

  // Per-seed ground truth.
  std::vector<double> object_label;     // 1 when inside a box and among its k2 closest
  std::vector<double> relevance_label;  // 1 when inside a description-mentioned object
  std::vector<int64_t> containing_object;  // object index or -1
  std::vector<uint8_t> in_target;

  std::vector<int64_t> fps_baseline;  // FPS selection of k0 seeds, for the ratio probe
  bool unique_split = false;
  Box3 target_box;
  int64_t target_category = 0;
};

PreparedScene prepare_scene(const Scene& scene, const PrepareConfig& config);
std::vector<PreparedScene> prepare_dataset(const std::vector<Scene>& scenes,
                                           const PrepareConfig& config);

/// Label builders, exposed for oracle tests.
std::vector<double> build_object_labels(const std::vector<std::array<double, 3>>& coords,
                                        const std::vector<SceneObject>& objects, int64_t k2);
std::vector<double> build_relevance_labels(const std::vector<std::array<double, 3>>& coords,
                                           const std::vector<SceneObject>& objects,
                                           const std::vector<int64_t>& mentioned);

}  // namespace groundsel
