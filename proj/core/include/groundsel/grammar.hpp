#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace groundsel {

/// Closed description grammar: object categories with characteristic size
/// ranges, named colors, spatial landmarks, and the three sentence templates.
/// Categories are separable by shape alone (footprint and height signatures),
/// so category labels are learnable from geometry.
namespace grammar {

constexpr int64_t kNumCategories = 8;
constexpr int64_t kNumColors = 6;

struct CategorySpec {
  const char* name;
  // per-axis size range [lo, hi] in scene units ([0,1]^3 room)
  std::array<double, 3> size_lo;
  std::array<double, 3> size_hi;
};

struct ColorSpec {
  const char* name;
  std::array<double, 3> rgb;
};

struct LandmarkSpec {
  const char* phrase;  // as it appears in a description, e.g. "left wall"
  int axis;            // 0 = x, 1 = y; -1 for the room center
  double plane;        // wall coordinate on that axis
};

const std::array<CategorySpec, kNumCategories>& categories();
const std::array<ColorSpec, kNumColors>& colors();
const std::vector<LandmarkSpec>& landmarks();

int64_t category_id(const std::string& name);  // -1 when unknown
const char* category_name(int64_t id);
const char* color_name(int64_t id);

/// Closed vocabulary over every word the grammar can emit. Index 0 is the
/// reserved UNK token; ids are stable across runs.
const std::vector<std::string>& vocabulary();
constexpr int64_t kUnkId = 0;

}  // namespace grammar
}  // namespace groundsel
