#pragma once

#include <cstdint>
#include <vector>

#include "groundsel/dataset.hpp"
#include "groundsel/geometry.hpp"
#include "groundsel/heads.hpp"
#include "groundsel/tensor.hpp"

namespace groundsel {

struct LossConfig {
  double alpha_vg = 0.1;    // grounding term weight
  double alpha_dks = 0.8;   // keypoint-score term weight
  double alpha_det = 5.0;   // detection term weight
  double alpha_lang = 0.1;  // language term weight
  int64_t k1 = 4;           // grounding positives: top-k1 by IoU
  double iou_threshold = 0.25;
  int64_t k2 = 5;  // closest-to-center count used when building s_o labels
  double focal_gamma = 2.0;
  double focal_alpha = 0.25;
};

/// Positive keypoints for the grounding loss: the intersection of the top-k1
/// IoUs (ties toward lower index) with IoU > threshold. Falls back to the
/// single max-IoU keypoint when that intersection is empty. Returned in
/// ascending index order.
std::vector<int64_t> vg_positives(const std::vector<double>& ious, int64_t k1, double threshold);

/// Softmax cross-entropy of the referring scores against the uniform
/// distribution over the positive set.
Tensor vg_loss(Graph& g, const Tensor& refer_scores, const std::vector<Box3>& boxes,
               const Box3& gt_box, const LossConfig& cfg);

/// Per-element focal term −α_t (1−p_t)^γ log p_t averaged over elements;
/// labels are 0/1, probabilities are clamped to [1e-12, 1−1e-12].
Tensor focal_loss(Graph& g, const Tensor& probs, const std::vector<double>& labels, double gamma,
                  double alpha);

/// Keypoint-score supervision: mean focal loss of the object scores against
/// the inside-a-box-and-near-its-center labels plus mean focal loss of the
/// relevance scores against the mentioned-category labels.
Tensor dks_loss(Graph& g, const Tensor& object_scores, const std::vector<double>& object_labels,
                const Tensor& relevance_scores, const std::vector<double>& relevance_labels,
                const LossConfig& cfg);

/// One refinement layer's boxes plus the seed index of each keypoint row.
struct LayerDetection {
  BoxPrediction pred;
  std::vector<int64_t> seed_indices;
};

/// Detection supervision, averaged over layers. Each keypoint is matched to
/// the object whose box contains its seed (or to none): matched keypoints
/// contribute category cross-entropy and center/size L1 terms (L1 summed
/// over axes, averaged over matched keypoints); every keypoint contributes
/// the two-way objectness cross-entropy.
Tensor det_loss(Graph& g, const std::vector<LayerDetection>& layers, const PreparedScene& ps);

/// Per-layer cross-entropy of the language category logits against the
/// described category, averaged over layers.
Tensor lang_loss(Graph& g, const std::vector<Tensor>& layer_logits, int64_t target_category);

struct LossBreakdown {
  Tensor vg, dks, det, lang;
  Tensor total;
};
/// Weighted sum of the four components.
LossBreakdown total_loss(Graph& g, const Tensor& vg, const Tensor& dks, const Tensor& det,
                         const Tensor& lang, const LossConfig& cfg);

/// Mean-over-rows softmax cross-entropy with integer class targets.
Tensor cross_entropy_rows(Graph& g, const Tensor& logits, const std::vector<int64_t>& targets);

}  // namespace groundsel
