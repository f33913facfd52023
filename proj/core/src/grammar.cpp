#include "groundsel/grammar.hpp"

#include <set>
#include <sstream>

namespace groundsel {
namespace grammar {

const std::array<CategorySpec, kNumCategories>& categories() {
  // Shape signatures: footprint area and height separate every pair.
  static const std::array<CategorySpec, kNumCategories> kCategories{{
      {"chair", {0.08, 0.08, 0.10}, {0.12, 0.12, 0.14}},
      {"table", {0.18, 0.18, 0.08}, {0.26, 0.26, 0.12}},
      {"sofa", {0.22, 0.10, 0.08}, {0.30, 0.14, 0.12}},
      {"lamp", {0.04, 0.04, 0.20}, {0.06, 0.06, 0.28}},
      {"cabinet", {0.10, 0.10, 0.22}, {0.16, 0.16, 0.30}},
      {"bed", {0.24, 0.16, 0.06}, {0.32, 0.22, 0.10}},
      {"shelf", {0.16, 0.05, 0.18}, {0.22, 0.08, 0.26}},
      {"stool", {0.05, 0.05, 0.05}, {0.08, 0.08, 0.08}},
  }};
  return kCategories;
}

const std::array<ColorSpec, kNumColors>& colors() {
  static const std::array<ColorSpec, kNumColors> kColors{{
      {"red", {0.90, 0.10, 0.10}},
      {"green", {0.10, 0.80, 0.10}},
      {"blue", {0.10, 0.20, 0.90}},
      {"yellow", {0.90, 0.85, 0.10}},
      {"white", {0.95, 0.95, 0.95}},
      {"black", {0.05, 0.05, 0.05}},
  }};
  return kColors;
}

const std::vector<LandmarkSpec>& landmarks() {
  static const std::vector<LandmarkSpec> kLandmarks{
      {"left wall", 0, 0.0},
      {"right wall", 0, 1.0},
      {"front wall", 1, 0.0},
      {"back wall", 1, 1.0},
      {"room center", -1, 0.5},
  };
  return kLandmarks;
}

int64_t category_id(const std::string& name) {
  const auto& cats = categories();
  for (int64_t i = 0; i < kNumCategories; ++i) {
    if (name == cats[static_cast<size_t>(i)].name) return i;
  }
  return -1;
}

const char* category_name(int64_t id) { return categories()[static_cast<size_t>(id)].name; }

const char* color_name(int64_t id) { return colors()[static_cast<size_t>(id)].name; }

const std::vector<std::string>& vocabulary() {
  static const std::vector<std::string> kVocab = [] {
    std::vector<std::string> v{"<unk>", "the", "near", "closest", "to"};
    for (const auto& c : categories()) v.emplace_back(c.name);
    for (const auto& c : colors()) v.emplace_back(c.name);
    // landmark phrases decompose into single words
    std::set<std::string> seen(v.begin(), v.end());
    for (const auto& lm : landmarks()) {
      std::istringstream words(lm.phrase);
      std::string w;
      while (words >> w) {
        if (seen.insert(w).second) v.push_back(w);
      }
    }
    return v;
  }();
  return kVocab;
}

}  // namespace grammar
}  // namespace groundsel
