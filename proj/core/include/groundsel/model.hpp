#pragma once

#include <cstdint>
#include <vector>

#include "groundsel/dataset.hpp"
#include "groundsel/dks.hpp"
#include "groundsel/encoders.hpp"
#include "groundsel/heads.hpp"
#include "groundsel/losses.hpp"
#include "groundsel/nn.hpp"
#include "groundsel/tpm.hpp"

namespace groundsel {

struct ModelConfig {
  // Backbone sampling plan.
  int64_t sa1_points = 2048;
  int64_t sa2_points = 1024;  // seed count M
  int64_t neighbors = 8;
  int64_t sa_hidden = 64;

  int64_t feature_dim = 64;  // point feature width C
  int64_t word_dim = 64;     // language feature width H
  int64_t heads = 4;
  int64_t ffn_width = 128;

  int64_t k_o = 1024;  // object-confident candidates kept (defaults to M)
  int64_t k0 = 512;    // initial keypoint budget K_0
  int64_t score_hidden = 64;

  int64_t tpm_layers = 4;
  double selection_ratio = 0.5;

  int64_t head_hidden = 64;
  uint64_t init_seed = 1;  // parameter initialization stream
};

PrepareConfig prepare_config(const ModelConfig& mc, const LossConfig& lc);

struct LayerOutputs {
  LayerDetection det;  // boxes over the layer's input keypoints (refined features)
  Tensor lang_logits;  // [1 x num_categories]
};

struct ForwardResult {
  WordFeatures words;  // encoded description
  SeedPoints seeds;
  Dks::Result dks;                  // keypoint scores and the selected P_0
  std::vector<TpmLayerOutput> tpm;  // refinement stack outputs
  std::vector<LayerOutputs> layer_outputs;

  KeypointSet final_points;  // keypoints surviving the last layer
  Tensor refer_scores;       // description-match score per final keypoint
  BoxPrediction final_pred;  // boxes over the final keypoints
  int64_t best_index = 0;    // argmax refer score, ties toward lowest index
  Box3 predicted_box;        // regressed box at best_index
};

/// The full grounding network: language encoder, two-stage point backbone,
/// language-aware keypoint filter, progressive cross-modal refinement stack,
/// and the detection / referring / language heads.
class GroundingModel {
 public:
  explicit GroundingModel(const ModelConfig& cfg);

  struct Options {
    bool ablate_selection = false;  // keep every keypoint through all layers
    bool ablate_dks_fps = false;    // replace the learned P_0 filter with FPS
  };

  ForwardResult forward(Graph& g, const PreparedScene& ps, const Options& opt) const;
  ForwardResult forward(Graph& g, const PreparedScene& ps) const { return forward(g, ps, Options()); }

  ParamMap& params() { return params_; }
  const ParamMap& params() const { return params_; }
  const ModelConfig& config() const { return cfg_; }

 private:
  ModelConfig cfg_;
  ParamMap params_;
  TextEncoder text_;
  Backbone backbone_;
  Dks dks_;
  std::vector<TpmLayer> layers_;
  DetHead det_;
  ReferHead refer_;
  LangHead lang_;
};

/// Builds every training loss from one forward pass.
LossBreakdown compute_losses(Graph& g, const ForwardResult& fr, const PreparedScene& ps,
                             const LossConfig& cfg);

}  // namespace groundsel
