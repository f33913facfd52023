#include "groundsel/dks.hpp"

#include <utility>

#include "groundsel/error.hpp"
#include "groundsel/ops.hpp"

namespace groundsel {

KeypointSet select_keypoints(Graph& g, const KeypointSet& from, const Tensor& from_features,
                             const std::vector<int64_t>& pick) {
  KeypointSet out;
  out.seed_indices.reserve(pick.size());
  out.coords.reserve(pick.size());
  for (int64_t p : pick) {
    if (p < 0 || p >= from.count()) {
      throw ContractError("keypoint selection index " + std::to_string(p) +
                          " outside set of size " + std::to_string(from.count()));
    }
    out.seed_indices.push_back(from.seed_indices[static_cast<size_t>(p)]);
    out.coords.push_back(from.coords[static_cast<size_t>(p)]);
  }
  out.coords_t = coords_tensor(out.coords);
  out.features = gather_rows(g, from_features, pick);
  return out;
}

KeypointSet keypoints_from_seeds(const SeedPoints& seeds) {
  KeypointSet out;
  out.stage = "seeds";
  out.seed_indices.resize(static_cast<size_t>(seeds.count()));
  for (size_t i = 0; i < out.seed_indices.size(); ++i) out.seed_indices[i] = static_cast<int64_t>(i);
  out.coords = seeds.coords;
  out.coords_t = seeds.coords_t;
  out.features = seeds.features;
  return out;
}

Dks::Dks(ParamMap& pm, const std::string& prefix, int64_t point_dim, int64_t word_dim,
         int64_t hidden, std::mt19937_64& rng)
    : object_mlp_(pm, prefix + ".object", point_dim, hidden, 1, rng),
      relevance_mlp_(pm, prefix + ".relevance", point_dim + word_dim, hidden, 1, rng) {}

namespace {

std::vector<int64_t> top_scores(const Tensor& scores, int64_t k) {
  if (k < 1 || k > scores.size()) {
    throw ContractError("keypoint budget " + std::to_string(k) + " outside [1, " +
                        std::to_string(scores.size()) + "]");
  }
  return argtopk(scores.data(), k);
}

}  // namespace

Dks::Confidence Dks::object_confidence(Graph& g, const SeedPoints& seeds, int64_t k_o) const {
  Confidence out;
  Tensor raw = object_mlp_(g, seeds.features);  // M x 1
  out.scores = reshape(g, sigmoid(g, raw), {raw.shape()[0]});
  out.picked = top_scores(out.scores, k_o);
  return out;
}

Dks::Relevance Dks::description_relevance(Graph& g, const Tensor& candidate_features,
                                          const WordFeatures& words, int64_t k_d) const {
  Relevance out;
  Tensor pooled = reduce_max(g, words.features, 0);              // length H
  Tensor tiled = broadcast_rows(g, pooled, candidate_features.shape()[0]);  // k_o x H
  Tensor joint = concat(g, {candidate_features, tiled});          // k_o x (C+H)
  Tensor raw = relevance_mlp_(g, joint);                          // k_o x 1
  out.scores = reshape(g, sigmoid(g, raw), {raw.shape()[0]});
  out.picked = top_scores(out.scores, k_d);
  return out;
}

Dks::Result Dks::operator()(Graph& g, const SeedPoints& seeds, const WordFeatures& words,
                            int64_t k_o, int64_t k_d) const {
  Result out;
  Confidence conf = object_confidence(g, seeds, k_o);
  out.object_scores = conf.scores;
  out.candidate_indices = conf.picked;

  KeypointSet all = keypoints_from_seeds(seeds);
  KeypointSet candidates = select_keypoints(g, all, all.features, conf.picked);

  Relevance rel = description_relevance(g, candidates.features, words, k_d);
  out.relevance_scores = rel.scores;
  out.p0 = select_keypoints(g, candidates, candidates.features, rel.picked);
  out.p0.stage = "dks";
  return out;
}

}  // namespace groundsel
