#include "groundsel/losses.hpp"

#include <algorithm>
#include <cmath>

#include "groundsel/error.hpp"
#include "groundsel/ops.hpp"

namespace groundsel {

std::vector<int64_t> vg_positives(const std::vector<double>& ious, int64_t k1, double threshold) {
  if (ious.empty()) throw ContractError("grounding positives need at least one candidate");
  const int64_t n = static_cast<int64_t>(ious.size());
  std::vector<int64_t> top = argtopk(ious, std::min(k1, n));
  std::vector<int64_t> positives;
  for (int64_t idx : top) {
    if (ious[static_cast<size_t>(idx)] > threshold) positives.push_back(idx);
  }
  if (positives.empty()) positives.push_back(top.front());  // max IoU, ties at lowest index
  std::sort(positives.begin(), positives.end());
  return positives;
}

Tensor cross_entropy_rows(Graph& g, const Tensor& logits, const std::vector<int64_t>& targets) {
  const int64_t n = logits.dim(0);
  const int64_t c = logits.dim(1);
  if (static_cast<int64_t>(targets.size()) != n) {
    throw ContractError("cross-entropy targets count " + std::to_string(targets.size()) +
                        " does not match " + std::to_string(n) + " rows");
  }
  Tensor onehot = Tensor::zeros({n, c});
  {
    auto d = onehot.mutable_data();
    for (int64_t i = 0; i < n; ++i) {
      const int64_t t = targets[static_cast<size_t>(i)];
      if (t < 0 || t >= c) {
        throw ContractError("cross-entropy target " + std::to_string(t) + " outside [0, " +
                            std::to_string(c) + ")");
      }
      d[static_cast<size_t>(i * c + t)] = 1.0;
    }
  }
  Tensor log_probs = log_op(g, softmax(g, logits));
  return affine(g, sum_all(g, mul(g, onehot, log_probs)), -1.0 / static_cast<double>(n), 0.0);
}

Tensor vg_loss(Graph& g, const Tensor& refer_scores, const std::vector<Box3>& boxes,
               const Box3& gt_box, const LossConfig& cfg) {
  const int64_t k = refer_scores.size();
  if (static_cast<int64_t>(boxes.size()) != k) {
    throw ContractError("grounding loss scores/boxes disagree: " + std::to_string(k) + " vs " +
                        std::to_string(boxes.size()));
  }
  std::vector<double> ious(boxes.size());
  for (size_t i = 0; i < boxes.size(); ++i) ious[i] = aabb_iou(boxes[i], gt_box);
  const std::vector<int64_t> positives = vg_positives(ious, cfg.k1, cfg.iou_threshold);

  Tensor target = Tensor::zeros({k});
  {
    auto d = target.mutable_data();
    const double w = 1.0 / static_cast<double>(positives.size());
    for (int64_t p : positives) d[static_cast<size_t>(p)] = w;
  }
  Tensor log_probs = log_op(g, softmax(g, refer_scores));
  return neg(g, sum_all(g, mul(g, target, log_probs)));
}

Tensor focal_loss(Graph& g, const Tensor& probs, const std::vector<double>& labels, double gamma,
                  double alpha) {
  const int64_t n = probs.size();
  if (static_cast<int64_t>(labels.size()) != n) {
    throw ContractError("focal loss labels count " + std::to_string(labels.size()) +
                        " does not match " + std::to_string(n) + " probabilities");
  }
  Tensor y(probs.shape(), labels);
  Tensor y_inv = Tensor::zeros(probs.shape());
  Tensor alpha_t = Tensor::zeros(probs.shape());
  {
    auto yi = y_inv.mutable_data();
    auto at = alpha_t.mutable_data();
    for (int64_t i = 0; i < n; ++i) {
      const double yv = labels[static_cast<size_t>(i)];
      if (yv != 0.0 && yv != 1.0) {
        throw ContractError("focal loss labels must be 0 or 1");
      }
      yi[static_cast<size_t>(i)] = 1.0 - yv;
      at[static_cast<size_t>(i)] = yv > 0.5 ? alpha : 1.0 - alpha;
    }
  }
  Tensor p = clamp(g, probs, 1e-12, 1.0 - 1e-12);
  // p_t = p where y=1, (1-p) where y=0.
  Tensor p_t = add(g, mul(g, y, p), mul(g, y_inv, affine(g, p, -1.0, 1.0)));
  Tensor modulator = pow_scalar(g, affine(g, p_t, -1.0, 1.0), gamma);
  Tensor terms = mul(g, alpha_t, mul(g, modulator, log_op(g, p_t)));
  return affine(g, sum_all(g, terms), -1.0 / static_cast<double>(n), 0.0);
}

Tensor dks_loss(Graph& g, const Tensor& object_scores, const std::vector<double>& object_labels,
                const Tensor& relevance_scores, const std::vector<double>& relevance_labels,
                const LossConfig& cfg) {
  Tensor lo = focal_loss(g, object_scores, object_labels, cfg.focal_gamma, cfg.focal_alpha);
  Tensor ld = focal_loss(g, relevance_scores, relevance_labels, cfg.focal_gamma, cfg.focal_alpha);
  return add(g, lo, ld);
}

Tensor det_loss(Graph& g, const std::vector<LayerDetection>& layers, const PreparedScene& ps) {
  if (layers.empty()) throw ContractError("detection loss needs at least one layer");
  if (ps.scene.objects.empty()) throw ContractError("detection loss needs a scene with objects");

  Tensor acc = Tensor::zeros({1});
  for (const LayerDetection& layer : layers) {
    const int64_t k = layer.pred.center.dim(0);
    if (static_cast<int64_t>(layer.seed_indices.size()) != k) {
      throw ContractError("detection layer keypoint count mismatch");
    }
    std::vector<int64_t> matched_rows;
    std::vector<int64_t> matched_objects;
    std::vector<int64_t> objectness_target(static_cast<size_t>(k), 0);
    for (int64_t row = 0; row < k; ++row) {
      const int64_t seed = layer.seed_indices[static_cast<size_t>(row)];
      const int64_t obj = ps.containing_object[static_cast<size_t>(seed)];
      if (obj >= 0) {
        matched_rows.push_back(row);
        matched_objects.push_back(obj);
        objectness_target[static_cast<size_t>(row)] = 1;
      }
    }

    Tensor layer_sum = cross_entropy_rows(g, layer.pred.objectness, objectness_target);
    if (!matched_rows.empty()) {
      const int64_t m = static_cast<int64_t>(matched_rows.size());
      std::vector<int64_t> categories(matched_rows.size());
      Tensor gt_center = Tensor::zeros({m, 3});
      Tensor gt_size = Tensor::zeros({m, 3});
      {
        auto c = gt_center.mutable_data();
        auto s = gt_size.mutable_data();
        for (int64_t i = 0; i < m; ++i) {
          const SceneObject& obj = ps.scene.objects[static_cast<size_t>(matched_objects[static_cast<size_t>(i)])];
          categories[static_cast<size_t>(i)] = obj.category;
          for (int64_t axis = 0; axis < 3; ++axis) {
            c[static_cast<size_t>(i * 3 + axis)] = obj.box.center[static_cast<size_t>(axis)];
            s[static_cast<size_t>(i * 3 + axis)] = obj.box.size[static_cast<size_t>(axis)];
          }
        }
      }
      Tensor cls = cross_entropy_rows(g, gather_rows(g, layer.pred.class_logits, matched_rows),
                                      categories);
      Tensor center_err = abs_op(g, sub(g, gather_rows(g, layer.pred.center, matched_rows),
                                        gt_center));
      Tensor size_err = abs_op(g, sub(g, gather_rows(g, layer.pred.size, matched_rows), gt_size));
      const double inv_m = 1.0 / static_cast<double>(m);
      layer_sum = add(g, layer_sum, cls);
      layer_sum = add(g, layer_sum, scale(g, sum_all(g, center_err), inv_m));
      layer_sum = add(g, layer_sum, scale(g, sum_all(g, size_err), inv_m));
    }
    acc = add(g, acc, layer_sum);
  }
  return scale(g, acc, 1.0 / static_cast<double>(layers.size()));
}

Tensor lang_loss(Graph& g, const std::vector<Tensor>& layer_logits, int64_t target_category) {
  if (layer_logits.empty()) throw ContractError("language loss needs at least one layer");
  Tensor acc = Tensor::zeros({1});
  for (const Tensor& logits : layer_logits) {
    acc = add(g, acc, cross_entropy_rows(g, logits, {target_category}));
  }
  return scale(g, acc, 1.0 / static_cast<double>(layer_logits.size()));
}

LossBreakdown total_loss(Graph& g, const Tensor& vg, const Tensor& dks, const Tensor& det,
                         const Tensor& lang, const LossConfig& cfg) {
  LossBreakdown out;
  out.vg = vg;
  out.dks = dks;
  out.det = det;
  out.lang = lang;
  Tensor t = scale(g, vg, cfg.alpha_vg);
  t = add(g, t, scale(g, dks, cfg.alpha_dks));
  t = add(g, t, scale(g, det, cfg.alpha_det));
  t = add(g, t, scale(g, lang, cfg.alpha_lang));
  out.total = t;
  return out;
}

}  // namespace groundsel
