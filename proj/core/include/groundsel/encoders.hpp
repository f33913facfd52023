#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "groundsel/nn.hpp"
#include "groundsel/tensor.hpp"

namespace groundsel {

struct PreparedScene;

/// Lowercase whitespace tokenization into the closed grammar vocabulary;
/// unknown words map to the reserved UNK id. Empty text is rejected.
std::vector<int64_t> tokenize(const std::string& text);

/// [n x 3] constant tensor from an array of points (no gradient).
Tensor coords_tensor(const std::vector<std::array<double, 3>>& coords);

struct WordFeatures {
  Tensor features;  // W x H
  std::vector<int64_t> token_ids;
  int64_t count() const { return static_cast<int64_t>(token_ids.size()); }
};

/// Embedding lookup + sinusoidal position encoding + one multi-head
/// self-attention layer (residual, layer-normalized).
class TextEncoder {
 public:
  TextEncoder() = default;
  TextEncoder(ParamMap& pm, const std::string& prefix, int64_t vocab_size, int64_t width,
              int64_t heads, std::mt19937_64& rng);

  WordFeatures operator()(Graph& g, const std::vector<int64_t>& tokens) const;

 private:
  Tensor embedding_;  // vocab x H
  AttentionBlock attn_;
  LayerNormP norm_;
};

/// One grouping stage: for every sampled center, gather its k nearest
/// neighbors, run a shared two-layer MLP on (relative offset ‖ neighbor
/// features), and max-reduce over the neighborhood.
class SetAbstractionStage {
 public:
  SetAbstractionStage() = default;
  SetAbstractionStage(ParamMap& pm, const std::string& prefix, int64_t in_features,
                      int64_t hidden, int64_t out_features, std::mt19937_64& rng);

  struct Result {
    std::vector<std::array<double, 3>> coords;
    Tensor features;               // out_count x out_features
    std::vector<int64_t> centers;  // indices into the stage input
  };

  /// Self-contained form: samples centers by FPS and groups by kNN.
  Result operator()(Graph& g, const std::vector<std::array<double, 3>>& in_coords,
                    const Tensor& in_features, int64_t out_count, int64_t k) const;

  /// Precomputed-plan form used by the backbone (centers/neighbors are pure
  /// geometry, cached per scene).
  Tensor apply(Graph& g, const std::vector<std::array<double, 3>>& in_coords,
               const Tensor& in_features, const std::vector<int64_t>& centers,
               const std::vector<std::vector<int64_t>>& neighbors) const;

 private:
  Mlp2 mlp_;
};

struct SeedPoints {
  std::vector<std::array<double, 3>> coords;
  Tensor coords_t;   // M x 3 constant
  Tensor features;   // M x C
  std::vector<int64_t> origin_indices;  // into the raw cloud
  int64_t count() const { return static_cast<int64_t>(coords.size()); }
};

/// Two stacked set-abstraction stages producing the M seed points.
class Backbone {
 public:
  Backbone() = default;
  Backbone(ParamMap& pm, const std::string& prefix, int64_t point_features, int64_t hidden,
           int64_t out_features, std::mt19937_64& rng);

  /// Runs on a prepared scene's cached sampling plan.
  SeedPoints operator()(Graph& g, const PreparedScene& ps) const;

 private:
  SetAbstractionStage stage1_, stage2_;
};

}  // namespace groundsel
