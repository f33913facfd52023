#include "groundsel/tpm.hpp"

#include <cmath>

#include "groundsel/error.hpp"
#include "groundsel/ops.hpp"

namespace groundsel {

std::vector<double> pool_attention(const std::vector<Tensor>& head_maps) {
  if (head_maps.empty()) throw ContractError("attention pooling needs at least one head map");
  const int64_t rows = head_maps.front().dim(0);
  const int64_t cols = head_maps.front().dim(1);
  std::vector<double> pooled(static_cast<size_t>(cols), 0.0);
  for (const Tensor& m : head_maps) {
    if (m.dim(0) != rows || m.dim(1) != cols) {
      throw ContractError("attention pooling head maps disagree in shape: " + m.shape_str());
    }
    std::span<const double> d = m.data();
    for (int64_t r = 0; r < rows; ++r) {
      for (int64_t c = 0; c < cols; ++c) {
        pooled[static_cast<size_t>(c)] += d[static_cast<size_t>(r * cols + c)];
      }
    }
  }
  const double denom = static_cast<double>(rows) * static_cast<double>(head_maps.size());
  for (double& v : pooled) v /= denom;
  return pooled;
}

PoolSelection attention_pool_select(const std::vector<Tensor>& head_maps, int64_t k_r) {
  PoolSelection out;
  out.pooled = pool_attention(head_maps);
  const int64_t k_all = static_cast<int64_t>(out.pooled.size());
  if (k_r < 1 || k_r > k_all) {
    throw ContractError("selection budget " + std::to_string(k_r) + " outside [1, " +
                        std::to_string(k_all) + "]");
  }
  out.picked = argtopk(out.pooled, k_r);
  return out;
}

TpmLayer::TpmLayer(ParamMap& pm, const std::string& prefix, int64_t point_dim, int64_t word_dim,
                   int64_t heads, int64_t ffn_width, std::mt19937_64& rng)
    : point_self_(pm, prefix + ".point_self", point_dim + 3, point_dim + 3, point_dim, point_dim,
                  heads, rng),
      point_seed_(pm, prefix + ".point_seed", point_dim + 3, point_dim + 3, point_dim, point_dim,
                  heads, rng),
      word_self_(pm, prefix + ".word_self", word_dim, word_dim, word_dim, word_dim, heads, rng),
      word_to_point_(pm, prefix + ".word_to_point", word_dim, point_dim + 3, point_dim, word_dim,
                     heads, rng),
      point_to_word_(pm, prefix + ".point_to_word", point_dim + 3, word_dim, word_dim, point_dim,
                     heads, rng),
      point_self_norm_(pm, prefix + ".point_self_norm", point_dim),
      point_seed_norm_(pm, prefix + ".point_seed_norm", point_dim),
      word_self_norm_(pm, prefix + ".word_self_norm", word_dim),
      word_cross_norm_(pm, prefix + ".word_cross_norm", word_dim),
      point_cross_norm_(pm, prefix + ".point_cross_norm", point_dim),
      point_ffn_norm_(pm, prefix + ".point_ffn_norm", point_dim),
      word_ffn_norm_(pm, prefix + ".word_ffn_norm", word_dim),
      point_ffn_(pm, prefix + ".point_ffn", point_dim, ffn_width, point_dim, rng),
      word_ffn_(pm, prefix + ".word_ffn", word_dim, ffn_width, word_dim, rng) {}

TpmLayerOutput TpmLayer::operator()(Graph& g, const KeypointSet& points,
                                    const WordFeatures& words, const SeedPoints& seeds,
                                    const Tensor& seed_qk, int64_t k_r) const {
  if (points.count() < 2) {
    throw ContractError("refinement layer needs at least 2 keypoints, got " +
                        std::to_string(points.count()));
  }

  // Point self-attention: positions join the query/key inputs.
  Tensor xp = points.features;
  {
    Tensor qk = concat(g, {xp, points.coords_t});
    AttentionResult r = point_self_(g, qk, qk, xp);
    xp = point_self_norm_(g, add(g, xp, r.out));
  }
  // Points gather context from the full seed set.
  {
    Tensor q = concat(g, {xp, points.coords_t});
    AttentionResult r = point_seed_(g, q, seed_qk, seeds.features);
    xp = point_seed_norm_(g, add(g, xp, r.out));
  }
  // Language self-attention.
  Tensor xw = words.features;
  {
    AttentionResult r = word_self_(g, xw, xw, xw);
    xw = word_self_norm_(g, add(g, xw, r.out));
  }
  // Cross-modal exchange, both directions applied to the same snapshots.
  TpmLayerOutput out;
  Tensor xw_next, xp_next;
  {
    Tensor point_qk = concat(g, {xp, points.coords_t});
    AttentionResult wp = word_to_point_(g, xw, point_qk, xp);
    AttentionResult pw = point_to_word_(g, point_qk, xw, xw);
    xw_next = word_cross_norm_(g, add(g, xw, wp.out));
    xp_next = point_cross_norm_(g, add(g, xp, pw.out));
    out.cross_attn = wp.attn;
  }
  // Per-stream feed-forward.
  xp_next = point_ffn_norm_(g, add(g, xp_next, point_ffn_(g, xp_next)));
  xw_next = word_ffn_norm_(g, add(g, xw_next, word_ffn_(g, xw_next)));

  out.refined_points = xp_next;
  out.words.features = xw_next;
  out.words.token_ids = words.token_ids;

  PoolSelection sel = attention_pool_select(out.cross_attn, k_r);
  out.pooled = std::move(sel.pooled);
  out.selected = select_keypoints(g, points, out.refined_points, sel.picked);
  return out;
}

std::vector<TpmLayerOutput> run_tpm(Graph& g, const std::vector<TpmLayer>& layers,
                                    const KeypointSet& p0, const WordFeatures& words,
                                    const SeedPoints& seeds, double selection_ratio,
                                    bool keep_all_keypoints) {
  if (selection_ratio <= 0.0 || selection_ratio > 1.0) {
    throw ContractError("selection ratio must lie in (0, 1]");
  }
  Tensor seed_qk = concat(g, {seeds.features, seeds.coords_t});
  std::vector<TpmLayerOutput> outputs;
  outputs.reserve(layers.size());
  const KeypointSet* current = &p0;
  const WordFeatures* current_words = &words;
  for (const TpmLayer& layer : layers) {
    const int64_t k = current->count();
    int64_t k_r = keep_all_keypoints
                      ? k
                      : static_cast<int64_t>(std::ceil(selection_ratio * static_cast<double>(k)));
    if (k_r < 1) k_r = 1;
    if (k_r > k) k_r = k;
    outputs.push_back(layer(g, *current, *current_words, seeds, seed_qk, k_r));
    outputs.back().selected.stage = "tpm-layer-" + std::to_string(outputs.size());
    current = &outputs.back().selected;
    current_words = &outputs.back().words;
  }
  return outputs;
}

}  // namespace groundsel
