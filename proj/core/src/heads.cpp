#include "groundsel/heads.hpp"

#include "groundsel/ops.hpp"

namespace groundsel {

DetHead::DetHead(ParamMap& pm, const std::string& prefix, int64_t point_dim, int64_t hidden,
                 int64_t num_categories, std::mt19937_64& rng)
    : fc1_(pm, prefix + ".fc1", point_dim, hidden, rng),
      offset_(pm, prefix + ".offset", hidden, 3, rng),
      log_size_(pm, prefix + ".size", hidden, 3, rng),
      cls_(pm, prefix + ".cls", hidden, num_categories, rng),
      obj_(pm, prefix + ".obj", hidden, 2, rng) {}

BoxPrediction DetHead::operator()(Graph& g, const KeypointSet& keypoints) const {
  Tensor h = relu(g, fc1_(g, keypoints.features));
  BoxPrediction out;
  out.center = add(g, keypoints.coords_t, offset_(g, h));
  out.size = exp_op(g, log_size_(g, h));
  out.class_logits = cls_(g, h);
  out.objectness = obj_(g, h);
  return out;
}

std::vector<Box3> prediction_boxes(const BoxPrediction& pred) {
  const int64_t k = pred.center.dim(0);
  std::vector<Box3> boxes(static_cast<size_t>(k));
  std::span<const double> c = pred.center.data();
  std::span<const double> s = pred.size.data();
  for (int64_t i = 0; i < k; ++i) {
    for (int axis = 0; axis < 3; ++axis) {
      boxes[static_cast<size_t>(i)].center[static_cast<size_t>(axis)] =
          c[static_cast<size_t>(i * 3 + axis)];
      boxes[static_cast<size_t>(i)].size[static_cast<size_t>(axis)] =
          s[static_cast<size_t>(i * 3 + axis)];
    }
  }
  return boxes;
}

ReferHead::ReferHead(ParamMap& pm, const std::string& prefix, int64_t point_dim, int64_t word_dim,
                     int64_t hidden, std::mt19937_64& rng)
    : mlp_(pm, prefix, point_dim + word_dim, hidden, 1, rng) {}

Tensor ReferHead::operator()(Graph& g, const Tensor& point_features,
                             const WordFeatures& words) const {
  Tensor pooled = reduce_max(g, words.features, 0);  // length H
  Tensor tiled = broadcast_rows(g, pooled, point_features.dim(0));
  Tensor raw = mlp_(g, concat(g, {point_features, tiled}));  // K x 1
  return reshape(g, raw, {raw.dim(0)});
}

LangHead::LangHead(ParamMap& pm, const std::string& prefix, int64_t word_dim,
                   int64_t num_categories, std::mt19937_64& rng)
    : fc_(pm, prefix, word_dim, num_categories, rng) {}

Tensor LangHead::operator()(Graph& g, const WordFeatures& words) const {
  Tensor pooled = reduce_max(g, words.features, 0);  // length H
  return fc_(g, reshape(g, pooled, {1, pooled.size()}));
}

}  // namespace groundsel
