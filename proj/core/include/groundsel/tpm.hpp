#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "groundsel/dks.hpp"
#include "groundsel/encoders.hpp"
#include "groundsel/nn.hpp"

namespace groundsel {

/// Mean of per-head attention maps over heads and query rows: maps are
/// [rows x K] each, the result has one entry per key column.
std::vector<double> pool_attention(const std::vector<Tensor>& head_maps);

struct PoolSelection {
  std::vector<double> pooled;   // K, mean attention received per keypoint
  std::vector<int64_t> picked;  // k_r positions, by descending pooled score
};
/// Ranks keypoints by pooled cross-attention and keeps the top k_r.
PoolSelection attention_pool_select(const std::vector<Tensor>& head_maps, int64_t k_r);

struct TpmLayerOutput {
  Tensor refined_points;          // K x C point features after this layer
  WordFeatures words;             // language stream after this layer
  std::vector<Tensor> cross_attn; // per-head [W x K] language-to-point maps
  std::vector<double> pooled;     // K, pooled attention used for selection
  KeypointSet selected;           // k_r keypoints carried to the next layer
};

/// One progressive refinement layer. Point and language streams are each
/// refined by attention blocks (residual + layer norm after every block):
/// points attend to themselves and to the full seed set, words attend to
/// themselves, then both streams exchange information through a pair of
/// cross-modal blocks evaluated in parallel from the same snapshots. The
/// language-to-point attention of that exchange drives keypoint selection.
/// Positions are appended to every point-side query/key input; values carry
/// features only.
class TpmLayer {
 public:
  TpmLayer() = default;
  TpmLayer(ParamMap& pm, const std::string& prefix, int64_t point_dim, int64_t word_dim,
           int64_t heads, int64_t ffn_width, std::mt19937_64& rng);

  /// `seed_qk` is concat(seed features, seed coords), shared across layers.
  /// Requires at least two keypoints; k_r in [1, K].
  TpmLayerOutput operator()(Graph& g, const KeypointSet& points, const WordFeatures& words,
                            const SeedPoints& seeds, const Tensor& seed_qk, int64_t k_r) const;

 private:
  AttentionBlock point_self_, point_seed_, word_self_, word_to_point_, point_to_word_;
  LayerNormP point_self_norm_, point_seed_norm_, word_self_norm_, word_cross_norm_,
      point_cross_norm_, point_ffn_norm_, word_ffn_norm_;
  Mlp2 point_ffn_, word_ffn_;
};

/// Runs the layer stack, shrinking the keypoint budget by selection_ratio
/// (ceiling) after each layer. With keep_all_keypoints the ranking is still
/// computed but every keypoint is carried forward.
std::vector<TpmLayerOutput> run_tpm(Graph& g, const std::vector<TpmLayer>& layers,
                                    const KeypointSet& p0, const WordFeatures& words,
                                    const SeedPoints& seeds, double selection_ratio,
                                    bool keep_all_keypoints = false);

}  // namespace groundsel
