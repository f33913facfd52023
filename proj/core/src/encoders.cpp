#include "groundsel/encoders.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "groundsel/dataset.hpp"
#include "groundsel/error.hpp"
#include "groundsel/geometry.hpp"
#include "groundsel/grammar.hpp"

namespace groundsel {

std::vector<int64_t> tokenize(const std::string& text) {
  std::string lowered = text;
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::istringstream words(lowered);
  std::vector<int64_t> ids;
  std::string w;
  const auto& vocab = grammar::vocabulary();
  while (words >> w) {
    int64_t id = grammar::kUnkId;
    for (size_t i = 0; i < vocab.size(); ++i) {
      if (vocab[i] == w) {
        id = static_cast<int64_t>(i);
        break;
      }
    }
    ids.push_back(id);
  }
  if (ids.empty()) throw ContractError("cannot tokenize empty description");
  return ids;
}

Tensor coords_tensor(const std::vector<std::array<double, 3>>& coords) {
  std::vector<double> data;
  data.reserve(coords.size() * 3);
  for (const auto& c : coords) {
    data.push_back(c[0]);
    data.push_back(c[1]);
    data.push_back(c[2]);
  }
  return Tensor({static_cast<int64_t>(coords.size()), 3}, std::move(data));
}

namespace {

Tensor sinusoidal_positions(int64_t count, int64_t width) {
  Tensor pe = Tensor::zeros({count, width});
  auto data = pe.mutable_data();
  for (int64_t pos = 0; pos < count; ++pos) {
    for (int64_t i = 0; i < width; i += 2) {
      const double rate = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(width));
      data[pos * width + i] = std::sin(static_cast<double>(pos) * rate);
      if (i + 1 < width) data[pos * width + i + 1] = std::cos(static_cast<double>(pos) * rate);
    }
  }
  return pe;
}

}  // namespace

TextEncoder::TextEncoder(ParamMap& pm, const std::string& prefix, int64_t vocab_size,
                         int64_t width, int64_t heads, std::mt19937_64& rng) {
  const double limit = std::sqrt(3.0 / static_cast<double>(width));
  embedding_ = pm.add(prefix + ".embed", Tensor::uniform({vocab_size, width}, rng, -limit, limit));
  attn_ = AttentionBlock(pm, prefix + ".attn", width, width, width, width, heads, rng);
  norm_ = LayerNormP(pm, prefix + ".norm", width);
}

WordFeatures TextEncoder::operator()(Graph& g, const std::vector<int64_t>& tokens) const {
  if (tokens.empty()) throw ContractError("encode_words requires at least one token");
  WordFeatures out;
  out.token_ids = tokens;
  Tensor x = gather_rows(g, embedding_, tokens);
  x = add(g, x, sinusoidal_positions(static_cast<int64_t>(tokens.size()), embedding_.dim(1)));
  Tensor attended = attn_(g, x, x, x).out;
  out.features = norm_(g, add(g, x, attended));
  return out;
}

SetAbstractionStage::SetAbstractionStage(ParamMap& pm, const std::string& prefix,
                                         int64_t in_features, int64_t hidden,
                                         int64_t out_features, std::mt19937_64& rng)
    : mlp_(pm, prefix, 3 + in_features, hidden, out_features, rng) {}

Tensor SetAbstractionStage::apply(Graph& g, const std::vector<std::array<double, 3>>& in_coords,
                                  const Tensor& in_features,
                                  const std::vector<int64_t>& centers,
                                  const std::vector<std::vector<int64_t>>& neighbors) const {
  const int64_t b = static_cast<int64_t>(centers.size());
  if (neighbors.size() != centers.size() || b == 0) {
    throw ContractError("set abstraction: centers/neighbors mismatch");
  }
  const int64_t k = static_cast<int64_t>(neighbors[0].size());
  // Row-stack every neighborhood: offsets are constants, features gathered.
  std::vector<int64_t> flat;
  flat.reserve(static_cast<size_t>(b * k));
  std::vector<double> offsets;
  offsets.reserve(static_cast<size_t>(b * k * 3));
  for (int64_t ci = 0; ci < b; ++ci) {
    const auto& center = in_coords[static_cast<size_t>(centers[static_cast<size_t>(ci)])];
    for (int64_t ni : neighbors[static_cast<size_t>(ci)]) {
      flat.push_back(ni);
      const auto& p = in_coords[static_cast<size_t>(ni)];
      offsets.push_back(p[0] - center[0]);
      offsets.push_back(p[1] - center[1]);
      offsets.push_back(p[2] - center[2]);
    }
  }
  Tensor rel({b * k, 3}, std::move(offsets));
  Tensor grouped = concat(g, {rel, gather_rows(g, in_features, flat)});
  Tensor lifted = mlp_(g, grouped);
  return reduce_max(g, reshape(g, lifted, {b, k, lifted.dim(1)}), 1);
}

SetAbstractionStage::Result SetAbstractionStage::operator()(
    Graph& g, const std::vector<std::array<double, 3>>& in_coords, const Tensor& in_features,
    int64_t out_count, int64_t k) const {
  Result res;
  res.centers = farthest_point_sample(in_coords, out_count);
  res.coords.reserve(static_cast<size_t>(out_count));
  for (int64_t i : res.centers) res.coords.push_back(in_coords[static_cast<size_t>(i)]);
  res.features = apply(g, in_coords, in_features, res.centers, knn_group(res.coords, in_coords, k));
  return res;
}

Backbone::Backbone(ParamMap& pm, const std::string& prefix, int64_t point_features,
                   int64_t hidden, int64_t out_features, std::mt19937_64& rng)
    : stage1_(pm, prefix + ".sa1", point_features, hidden, out_features, rng),
      stage2_(pm, prefix + ".sa2", out_features, hidden, out_features, rng) {}

SeedPoints Backbone::operator()(Graph& g, const PreparedScene& ps) const {
  const auto& cloud = ps.scene.points;
  std::vector<double> feat_data;
  feat_data.reserve(cloud.features.size() * 3);
  for (const auto& f : cloud.features) feat_data.insert(feat_data.end(), f.begin(), f.end());
  Tensor raw_features({static_cast<int64_t>(cloud.features.size()),
                       static_cast<int64_t>(cloud.features.front().size())},
                      std::move(feat_data));

  std::vector<std::array<double, 3>> sa1_coords;
  sa1_coords.reserve(ps.sa1_centers.size());
  for (int64_t i : ps.sa1_centers) sa1_coords.push_back(cloud.coords[static_cast<size_t>(i)]);
  Tensor sa1_features =
      stage1_.apply(g, cloud.coords, raw_features, ps.sa1_centers, ps.sa1_neighbors);

  SeedPoints seeds;
  seeds.coords = ps.seed_coords;
  seeds.coords_t = coords_tensor(ps.seed_coords);
  seeds.features = stage2_.apply(g, sa1_coords, sa1_features, ps.sa2_centers, ps.sa2_neighbors);
  seeds.origin_indices.reserve(ps.sa2_centers.size());
  for (int64_t i : ps.sa2_centers) {
    seeds.origin_indices.push_back(ps.sa1_centers[static_cast<size_t>(i)]);
  }
  return seeds;
}

}  // namespace groundsel
