#include "groundsel/dataset.hpp"

#include <fstream>
#include <json.hpp>

#include "groundsel/encoders.hpp"
#include "groundsel/error.hpp"

namespace groundsel {

namespace {

using nlohmann::json;

constexpr const char* kFormatName = "groundsel-dataset";
constexpr int kFormatVersion = 1;

json scene_to_json(const Scene& s) {
  json objects = json::array();
  for (const auto& o : s.objects) {
    objects.push_back({{"center", o.box.center},
                       {"size", o.box.size},
                       {"category", o.category},
                       {"color", o.color}});
  }
  json points = json::array();
  for (size_t i = 0; i < s.points.coords.size(); ++i) {
    const auto& c = s.points.coords[i];
    const auto& f = s.points.features[i];
    points.push_back({c[0], c[1], c[2], f[0], f[1], f[2]});
  }
  return {{"seed", s.scene_seed},
          {"description", s.description},
          {"target", s.target_index},
          {"objects", objects},
          {"points", points}};
}

Scene scene_from_json(const json& j) {
  Scene s;
  s.scene_seed = j.at("seed").get<int64_t>();
  s.description = j.at("description").get<std::string>();
  s.target_index = j.at("target").get<int64_t>();
  for (const auto& jo : j.at("objects")) {
    SceneObject o;
    o.box.center = jo.at("center").get<std::array<double, 3>>();
    o.box.size = jo.at("size").get<std::array<double, 3>>();
    o.category = jo.at("category").get<int64_t>();
    o.color = jo.at("color").get<int64_t>();
    s.objects.push_back(o);
  }
  for (const auto& jp : j.at("points")) {
    if (jp.size() != 6) throw IoError("point record must have 6 values");
    s.points.coords.push_back({jp[0].get<double>(), jp[1].get<double>(), jp[2].get<double>()});
    s.points.features.push_back({jp[3].get<double>(), jp[4].get<double>(), jp[5].get<double>()});
  }
  if (s.objects.empty()) throw IoError("scene has no objects");
  if (s.target_index < 0 || s.target_index >= static_cast<int64_t>(s.objects.size())) {
    throw IoError("target index out of range");
  }
  return s;
}

}  // namespace

void write_dataset(const std::string& path, const std::vector<Scene>& scenes) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  const json header = {
      {"format", kFormatName}, {"version", kFormatVersion}, {"scenes", scenes.size()}};
  out << header.dump() << "\n";
  for (const Scene& s : scenes) out << scene_to_json(s).dump() << "\n";
  if (!out) throw IoError("write failed: " + path);
}

std::vector<Scene> read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file, expected header line");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw IoError(path + ":1: bad header: " + e.what());
  }
  if (header.value("format", "") != kFormatName) {
    throw IoError(path + ":1: not a " + std::string(kFormatName) + " file");
  }
  if (header.value("version", -1) != kFormatVersion) {
    throw IoError(path + ":1: unsupported version");
  }
  const auto expected = header.at("scenes").get<size_t>();
  std::vector<Scene> scenes;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      scenes.push_back(scene_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw IoError(path + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const IoError& e) {
      throw IoError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (scenes.size() != expected) {
    throw IoError(path + ": header promises " + std::to_string(expected) + " scenes, found " +
                  std::to_string(scenes.size()));
  }
  return scenes;
}

std::vector<double> build_object_labels(const std::vector<std::array<double, 3>>& coords,
                                        const std::vector<SceneObject>& objects, int64_t k2) {
  std::vector<double> labels(coords.size(), 0.0);
  const int64_t k = std::min<int64_t>(k2, static_cast<int64_t>(coords.size()));
  for (const auto& o : objects) {
    const auto inside = points_in_box(coords, o.box);
    for (int64_t i : k_closest_to_center(coords, o.box, k)) {
      if (inside[static_cast<size_t>(i)]) labels[static_cast<size_t>(i)] = 1.0;
    }
  }
  return labels;
}

std::vector<double> build_relevance_labels(const std::vector<std::array<double, 3>>& coords,
                                           const std::vector<SceneObject>& objects,
                                           const std::vector<int64_t>& mentioned) {
  std::vector<double> labels(coords.size(), 0.0);
  for (const auto& o : objects) {
    if (std::find(mentioned.begin(), mentioned.end(), o.category) == mentioned.end()) continue;
    const auto inside = points_in_box(coords, o.box);
    for (size_t i = 0; i < coords.size(); ++i) {
      if (inside[i]) labels[i] = 1.0;
    }
  }
  return labels;
}

PreparedScene prepare_scene(const Scene& scene, const PrepareConfig& config) {
  const auto& coords = scene.points.coords;
  const int64_t n = static_cast<int64_t>(coords.size());
  if (n < config.sa2_points) {
    throw ContractError("cloud has " + std::to_string(n) + " points, fewer than the " +
                        std::to_string(config.sa2_points) + " seeds required");
  }
  PreparedScene ps;
  ps.scene = scene;
  ps.tokens = tokenize(scene.description);

  const int64_t sa1_count = std::min(config.sa1_points, n);
  ps.sa1_centers = farthest_point_sample(coords, sa1_count);
  std::vector<std::array<double, 3>> sa1_coords;
  sa1_coords.reserve(static_cast<size_t>(sa1_count));
  for (int64_t i : ps.sa1_centers) sa1_coords.push_back(coords[static_cast<size_t>(i)]);
  ps.sa1_neighbors = knn_group(sa1_coords, coords, config.neighbors);

  ps.sa2_centers = farthest_point_sample(sa1_coords, config.sa2_points);
  ps.seed_coords.reserve(static_cast<size_t>(config.sa2_points));
  for (int64_t i : ps.sa2_centers) ps.seed_coords.push_back(sa1_coords[static_cast<size_t>(i)]);
  ps.sa2_neighbors = knn_group(ps.seed_coords, sa1_coords, config.neighbors);

  ps.object_label = build_object_labels(ps.seed_coords, scene.objects, config.k2);
  ps.relevance_label = build_relevance_labels(ps.seed_coords, scene.objects,
                                              mentioned_categories(scene.description));
  ps.containing_object.assign(ps.seed_coords.size(), -1);
  for (size_t obj = 0; obj < scene.objects.size(); ++obj) {
    const auto inside = points_in_box(ps.seed_coords, scene.objects[obj].box);
    for (size_t i = 0; i < inside.size(); ++i) {
      if (inside[i] && ps.containing_object[i] < 0)
        ps.containing_object[i] = static_cast<int64_t>(obj);
    }
  }
  ps.target_box = scene.objects[static_cast<size_t>(scene.target_index)].box;
  ps.target_category = scene.objects[static_cast<size_t>(scene.target_index)].category;
  const auto in_target_mask = points_in_box(ps.seed_coords, ps.target_box);
  ps.in_target.assign(in_target_mask.begin(), in_target_mask.end());
  ps.fps_baseline = farthest_point_sample(ps.seed_coords, std::min(config.k0, config.sa2_points));
  ps.unique_split = scene.target_is_unique();
  return ps;
}

std::vector<PreparedScene> prepare_dataset(const std::vector<Scene>& scenes,
                                           const PrepareConfig& config) {
  std::vector<PreparedScene> out;
  out.reserve(scenes.size());
  for (const Scene& s : scenes) out.push_back(prepare_scene(s, config));
  return out;
}

}  // namespace groundsel
