#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "groundsel/dks.hpp"
#include "groundsel/encoders.hpp"
#include "groundsel/geometry.hpp"
#include "groundsel/nn.hpp"

namespace groundsel {

struct BoxPrediction {
  Tensor center;        // K x 3, keypoint position plus predicted offset
  Tensor size;          // K x 3, strictly positive (exp of the raw output)
  Tensor class_logits;  // K x num_categories
  Tensor objectness;    // K x 2 logits: [not-object, object]
};

/// Per-keypoint box regression and classification. One shared hidden layer
/// feeds four linear outputs: center offset, log size, category logits and
/// a two-way objectness score.
class DetHead {
 public:
  DetHead() = default;
  DetHead(ParamMap& pm, const std::string& prefix, int64_t point_dim, int64_t hidden,
          int64_t num_categories, std::mt19937_64& rng);

  BoxPrediction operator()(Graph& g, const KeypointSet& keypoints) const;

 private:
  Linear fc1_, offset_, log_size_, cls_, obj_;
};

/// Reads each row of a box prediction into plain geometry.
std::vector<Box3> prediction_boxes(const BoxPrediction& pred);

/// Scores how well each keypoint matches the description: a two-layer MLP
/// over the keypoint feature joined with the max-pooled word feature. Raw
/// scores; the grounding loss and the final argmax both consume them as
/// logits.
class ReferHead {
 public:
  ReferHead() = default;
  ReferHead(ParamMap& pm, const std::string& prefix, int64_t point_dim, int64_t word_dim,
            int64_t hidden, std::mt19937_64& rng);

  /// -> length-K tensor of match scores.
  Tensor operator()(Graph& g, const Tensor& point_features, const WordFeatures& words) const;

 private:
  Mlp2 mlp_;
};

/// Predicts the described category from the max-pooled word feature.
class LangHead {
 public:
  LangHead() = default;
  LangHead(ParamMap& pm, const std::string& prefix, int64_t word_dim, int64_t num_categories,
           std::mt19937_64& rng);

  /// -> [1 x num_categories] logits.
  Tensor operator()(Graph& g, const WordFeatures& words) const;

 private:
  Linear fc_;
};

}  // namespace groundsel
