#include "groundsel/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "groundsel/error.hpp"
#include "groundsel/grammar.hpp"

namespace groundsel {

namespace {

// Points are sampled on the faces of a box shrunk by this inset, so the
// 5-decimal quantization below can never push a surface point outside its
// box (or a floor point inside a footprint).
constexpr double kSurfaceInset = 1e-4;

double round5(double v) { return std::round(v * 1e5) / 1e5; }

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Explicit draw helpers: the raw mt19937_64 stream is fully specified by the
// standard, so these are deterministic across library implementations.
double draw_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double draw_range(std::mt19937_64& rng, double lo, double hi) {
  return lo + draw_unit(rng) * (hi - lo);
}

int64_t draw_int(std::mt19937_64& rng, int64_t lo, int64_t hi) {  // inclusive bounds
  return lo + static_cast<int64_t>(rng() % static_cast<uint64_t>(hi - lo + 1));
}

int64_t draw_weighted(std::mt19937_64& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double r = draw_unit(rng) * total;
  for (size_t i = 0; i < weights.size(); ++i) {
    r -= weights[i];
    if (r <= 0.0) return static_cast<int64_t>(i);
  }
  return static_cast<int64_t>(weights.size()) - 1;
}

bool footprints_overlap(const Box3& a, const Box3& b, double gap) {
  for (int axis = 0; axis < 2; ++axis) {
    if (a.hi(axis) + gap <= b.lo(axis) || b.hi(axis) + gap <= a.lo(axis)) return false;
  }
  return true;
}

double landmark_distance(const Box3& box, const grammar::LandmarkSpec& lm) {
  if (lm.axis < 0) {
    const double dx = box.center[0] - 0.5, dy = box.center[1] - 0.5;
    return std::sqrt(dx * dx + dy * dy);
  }
  return std::abs(box.center[static_cast<size_t>(lm.axis)] - lm.plane);
}

double center_distance(const Box3& a, const Box3& b) {
  const double dx = a.center[0] - b.center[0];
  const double dy = a.center[1] - b.center[1];
  const double dz = a.center[2] - b.center[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Objects of category `cat`, sorted candidate list for a "nearest" claim:
// returns (winner index, winner distance, runner-up distance) for the given
// per-object distance values (infinity when not a candidate).
struct NearestClaim {
  int64_t winner = -1;
  double best = 0.0;
  double second = 0.0;
};

NearestClaim nearest_claim(const std::vector<double>& distance) {
  NearestClaim c;
  c.best = c.second = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < distance.size(); ++i) {
    if (distance[i] < c.best) {
      c.second = c.best;
      c.best = distance[i];
      c.winner = static_cast<int64_t>(i);
    } else if (distance[i] < c.second) {
      c.second = distance[i];
    }
  }
  return c;
}

struct DescriptionChoice {
  std::string text;
  int64_t target = -1;
};

// Every description whose grammar semantics denote exactly `target`, grouped
// by template kind: [0] color, [1] near, [2] landmark.
std::array<std::vector<std::string>, 3> valid_descriptions(const std::vector<SceneObject>& objects,
                                                           int64_t target, double margin) {
  std::array<std::vector<std::string>, 3> out;
  const SceneObject& tgt = objects[static_cast<size_t>(target)];
  const std::string cat = grammar::category_name(tgt.category);

  // "the <color> <category>" — requires the (color, category) pair unique.
  int64_t pair_count = 0;
  for (const auto& o : objects) {
    if (o.category == tgt.category && o.color == tgt.color) ++pair_count;
  }
  if (pair_count == 1) {
    out[0].push_back("the " + std::string(grammar::color_name(tgt.color)) + " " + cat);
  }

  // "the <category> near the <category2>" — the category-c object whose
  // distance to the closest category2 object is smallest, by `margin`.
  for (int64_t cat2 = 0; cat2 < grammar::kNumCategories; ++cat2) {
    if (cat2 == tgt.category) continue;
    bool has_cat2 = false;
    for (const auto& o : objects) has_cat2 = has_cat2 || o.category == cat2;
    if (!has_cat2) continue;
    std::vector<double> dist(objects.size(), std::numeric_limits<double>::infinity());
    for (size_t i = 0; i < objects.size(); ++i) {
      if (objects[i].category != tgt.category) continue;
      double d = std::numeric_limits<double>::infinity();
      for (const auto& o : objects) {
        if (o.category == cat2) d = std::min(d, center_distance(objects[i].box, o.box));
      }
      dist[i] = d;
    }
    const NearestClaim claim = nearest_claim(dist);
    if (claim.winner == target && claim.best + margin <= claim.second) {
      out[1].push_back("the " + cat + " near the " + grammar::category_name(cat2));
    }
  }

  // "the <category> closest to the <landmark>".
  for (const auto& lm : grammar::landmarks()) {
    std::vector<double> dist(objects.size(), std::numeric_limits<double>::infinity());
    for (size_t i = 0; i < objects.size(); ++i) {
      if (objects[i].category == tgt.category) dist[i] = landmark_distance(objects[i].box, lm);
    }
    const NearestClaim claim = nearest_claim(dist);
    if (claim.winner == target && claim.best + margin <= claim.second) {
      out[2].push_back("the " + cat + " closest to the " + lm.phrase);
    }
  }
  return out;
}

DescriptionChoice choose_description(const std::vector<SceneObject>& objects,
                                     std::mt19937_64& rng, double margin) {
  // Template kinds are weighted toward color mentions, which tie the
  // language most directly to point features.
  const std::array<double, 3> kKindWeights{0.6, 0.2, 0.2};
  const int64_t n = static_cast<int64_t>(objects.size());
  const int64_t first = draw_int(rng, 0, n - 1);
  for (int64_t step = 0; step < n; ++step) {
    const int64_t target = (first + step) % n;
    const auto options = valid_descriptions(objects, target, margin);
    std::vector<double> weights;
    std::vector<int64_t> kinds;
    for (int64_t k = 0; k < 3; ++k) {
      if (!options[static_cast<size_t>(k)].empty()) {
        weights.push_back(kKindWeights[static_cast<size_t>(k)]);
        kinds.push_back(k);
      }
    }
    if (weights.empty()) continue;
    const auto& pool =
        options[static_cast<size_t>(kinds[static_cast<size_t>(draw_weighted(rng, weights))])];
    DescriptionChoice choice;
    choice.text = pool[static_cast<size_t>(draw_int(rng, 0, static_cast<int64_t>(pool.size()) - 1))];
    choice.target = target;
    return choice;
  }
  return {};
}

std::array<double, 3> noisy_color(const std::array<double, 3>& rgb, std::mt19937_64& rng,
                                  double noise) {
  std::array<double, 3> c;
  for (int i = 0; i < 3; ++i) {
    c[static_cast<size_t>(i)] = round5(
        std::clamp(rgb[static_cast<size_t>(i)] + draw_range(rng, -noise, noise), 0.0, 1.0));
  }
  return c;
}

// One point on the 5 exposed faces (top + 4 sides) of the inset box,
// face chosen proportionally to area.
std::array<double, 3> sample_surface_point(const Box3& box, std::mt19937_64& rng) {
  const double sx = box.size[0] - 2 * kSurfaceInset;
  const double sy = box.size[1] - 2 * kSurfaceInset;
  const double sz = box.size[2] - 2 * kSurfaceInset;
  const std::vector<double> face_area{sx * sy, sy * sz, sy * sz, sx * sz, sx * sz};
  const int64_t face = draw_weighted(rng, face_area);
  const double u = draw_range(rng, -0.5, 0.5);
  const double v = draw_range(rng, -0.5, 0.5);
  std::array<double, 3> p = box.center;
  switch (face) {
    case 0:  // top
      p[0] += u * sx;
      p[1] += v * sy;
      p[2] += 0.5 * sz;
      break;
    case 1:  // x-min side
    case 2:  // x-max side
      p[0] += (face == 1 ? -0.5 : 0.5) * sx;
      p[1] += u * sy;
      p[2] += v * sz;
      break;
    default:  // y-min / y-max side
      p[0] += u * sx;
      p[1] += (face == 3 ? -0.5 : 0.5) * sy;
      p[2] += v * sz;
      break;
  }
  for (double& c : p) c = round5(c);
  return p;
}

}  // namespace

bool Scene::target_is_unique() const {
  const int64_t cat = objects[static_cast<size_t>(target_index)].category;
  int64_t count = 0;
  for (const auto& o : objects) count += o.category == cat;
  return count == 1;
}

Scene generate_scene(int64_t seed, const SceneConfig& config) {
  const auto& cats = grammar::categories();
  for (int64_t attempt = 0; attempt < 1000; ++attempt) {
    std::mt19937_64 rng(splitmix64(static_cast<uint64_t>(seed) * 0x10001ULL +
                                   static_cast<uint64_t>(attempt)));
    const int64_t n_objects = draw_int(rng, config.min_objects, config.max_objects);

    // Place boxes on the floor with disjoint, gap-separated footprints.
    std::vector<SceneObject> objects;
    bool placed_all = true;
    for (int64_t i = 0; i < n_objects && placed_all; ++i) {
      bool placed = false;
      for (int64_t placement = 0; placement < 100 && !placed; ++placement) {
        SceneObject obj;
        obj.category = draw_int(rng, 0, grammar::kNumCategories - 1);
        obj.color = draw_int(rng, 0, grammar::kNumColors - 1);
        const auto& spec = cats[static_cast<size_t>(obj.category)];
        for (int axis = 0; axis < 3; ++axis) {
          obj.box.size[static_cast<size_t>(axis)] =
              round5(draw_range(rng, spec.size_lo[static_cast<size_t>(axis)],
                                spec.size_hi[static_cast<size_t>(axis)]));
        }
        const double m = config.wall_margin;
        obj.box.center = {
            round5(draw_range(rng, m + 0.5 * obj.box.size[0], 1.0 - m - 0.5 * obj.box.size[0])),
            round5(draw_range(rng, m + 0.5 * obj.box.size[1], 1.0 - m - 0.5 * obj.box.size[1])),
            round5(0.5 * obj.box.size[2])};
        bool clear = true;
        for (const auto& other : objects) {
          clear = clear && !footprints_overlap(obj.box, other.box, config.object_gap);
        }
        if (clear) {
          objects.push_back(obj);
          placed = true;
        }
      }
      placed_all = placed_all && placed;
    }
    if (!placed_all) continue;

    const DescriptionChoice desc = choose_description(objects, rng, config.relation_margin);
    if (desc.target < 0) continue;

    // Point budget: a floor share, the rest split over objects by exposed
    // surface area with a per-object minimum.
    const int64_t floor_points =
        static_cast<int64_t>(std::llround(config.floor_fraction * static_cast<double>(config.num_points)));
    const int64_t object_points = config.num_points - floor_points;
    std::vector<double> area(objects.size());
    double total_area = 0.0;
    for (size_t i = 0; i < objects.size(); ++i) {
      const auto& s = objects[i].box.size;
      area[i] = s[0] * s[1] + 2 * s[0] * s[2] + 2 * s[1] * s[2];
      total_area += area[i];
    }
    std::vector<int64_t> alloc(objects.size());
    int64_t assigned = 0;
    for (size_t i = 0; i < objects.size(); ++i) {
      alloc[i] = std::max(config.min_points_per_object,
                          static_cast<int64_t>(std::floor(static_cast<double>(object_points) *
                                                          area[i] / total_area)));
      assigned += alloc[i];
    }
    // Trim any excess from the biggest allocations; spread any shortfall.
    while (assigned != object_points) {
      auto it = assigned > object_points ? std::max_element(alloc.begin(), alloc.end())
                                         : std::min_element(alloc.begin(), alloc.end());
      *it += assigned > object_points ? -1 : 1;
      assigned += assigned > object_points ? -1 : 1;
    }

    Scene scene;
    scene.scene_seed = seed;
    scene.objects = objects;
    scene.description = desc.text;
    scene.target_index = desc.target;
    scene.points.coords.reserve(static_cast<size_t>(config.num_points));
    scene.points.features.reserve(static_cast<size_t>(config.num_points));
    for (size_t i = 0; i < objects.size(); ++i) {
      const auto& rgb = grammar::colors()[static_cast<size_t>(objects[i].color)].rgb;
      for (int64_t p = 0; p < alloc[i]; ++p) {
        scene.points.coords.push_back(sample_surface_point(objects[i].box, rng));
        const auto c = noisy_color(rgb, rng, config.color_noise);
        scene.points.features.push_back({c[0], c[1], c[2]});
      }
    }
    const std::array<double, 3> kFloorGray{0.5, 0.5, 0.5};
    bool floor_ok = true;
    for (int64_t p = 0; p < floor_points && floor_ok; ++p) {
      bool found = false;
      for (int64_t tries = 0; tries < 200 && !found; ++tries) {
        std::array<double, 3> pt{round5(draw_unit(rng)), round5(draw_unit(rng)), 0.0};
        bool clear = true;
        for (const auto& o : objects) {
          clear = clear && !(pt[0] >= o.box.lo(0) - kSurfaceInset &&
                             pt[0] <= o.box.hi(0) + kSurfaceInset &&
                             pt[1] >= o.box.lo(1) - kSurfaceInset &&
                             pt[1] <= o.box.hi(1) + kSurfaceInset);
        }
        if (clear) {
          scene.points.coords.push_back(pt);
          const auto c = noisy_color(kFloorGray, rng, config.color_noise);
          scene.points.features.push_back({c[0], c[1], c[2]});
          found = true;
        }
      }
      floor_ok = floor_ok && found;
    }
    if (!floor_ok) continue;
    return scene;
  }
  throw GenerationError("scene generation failed after 1000 attempts for seed " +
                        std::to_string(seed));
}

std::vector<int64_t> mentioned_categories(const std::string& description) {
  std::vector<int64_t> out;
  std::istringstream words(description);
  std::string w;
  while (words >> w) {
    const int64_t id = grammar::category_id(w);
    if (id >= 0 && std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
  }
  return out;
}

}  // namespace groundsel
