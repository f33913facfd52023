#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "groundsel/encoders.hpp"
#include "groundsel/nn.hpp"

namespace groundsel {

/// A selected subset of the seed points carried forward as grounding
/// candidates. Later stages always select from earlier ones, so seed_indices
/// chains are nested.
struct KeypointSet {
  std::vector<int64_t> seed_indices;  // into the seed list, distinct
  std::vector<std::array<double, 3>> coords;
  Tensor coords_t;   // K x 3 constant
  Tensor features;   // K x C
  std::string stage;  // which pipeline stage produced this set
  int64_t count() const { return static_cast<int64_t>(seed_indices.size()); }
};

/// Gathers rows `pick` (indices into `from`'s rows) of a keypoint set.
KeypointSet select_keypoints(Graph& g, const KeypointSet& from, const Tensor& from_features,
                             const std::vector<int64_t>& pick);

/// Keypoint set covering all seeds (identity selection).
KeypointSet keypoints_from_seeds(const SeedPoints& seeds);

/// Two-step language-aware keypoint filter: an object-confidence score over
/// all seeds picks the k_o most object-like candidates, then a description
/// relevance score conditioned on the pooled word feature keeps the top k_d.
class Dks {
 public:
  Dks() = default;
  Dks(ParamMap& pm, const std::string& prefix, int64_t point_dim, int64_t word_dim,
      int64_t hidden, std::mt19937_64& rng);

  struct Confidence {
    Tensor scores;                // length M, sigmoid outputs
    std::vector<int64_t> picked;  // k_o seed indices, by descending score
  };
  Confidence object_confidence(Graph& g, const SeedPoints& seeds, int64_t k_o) const;

  struct Relevance {
    Tensor scores;                // length k_o
    std::vector<int64_t> picked;  // k_d positions within the candidate list
  };
  Relevance description_relevance(Graph& g, const Tensor& candidate_features,
                                  const WordFeatures& words, int64_t k_d) const;

  struct Result {
    KeypointSet p0;
    Tensor object_scores;     // M
    Tensor relevance_scores;  // k_o, aligned with candidate_indices
    std::vector<int64_t> candidate_indices;  // the k_o object-confident seeds
  };
  Result operator()(Graph& g, const SeedPoints& seeds, const WordFeatures& words, int64_t k_o,
                    int64_t k_d) const;

 private:
  Mlp2 object_mlp_;     // C -> hidden -> 1
  Mlp2 relevance_mlp_;  // C + H -> hidden -> 1
};

}  // namespace groundsel
