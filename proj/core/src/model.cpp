#include "groundsel/model.hpp"

#include <algorithm>

#include "groundsel/error.hpp"
#include "groundsel/grammar.hpp"
#include "groundsel/ops.hpp"

namespace groundsel {

PrepareConfig prepare_config(const ModelConfig& mc, const LossConfig& lc) {
  PrepareConfig pc;
  pc.sa1_points = mc.sa1_points;
  pc.sa2_points = mc.sa2_points;
  pc.neighbors = mc.neighbors;
  pc.k0 = mc.k0;
  pc.k2 = lc.k2;
  return pc;
}

namespace {

std::vector<TpmLayer> build_layers(ParamMap& pm, const ModelConfig& cfg, std::mt19937_64& rng) {
  if (cfg.tpm_layers < 1) throw ContractError("model needs at least one refinement layer");
  std::vector<TpmLayer> layers;
  layers.reserve(static_cast<size_t>(cfg.tpm_layers));
  for (int64_t t = 0; t < cfg.tpm_layers; ++t) {
    layers.emplace_back(pm, "tpm.layer" + std::to_string(t), cfg.feature_dim, cfg.word_dim,
                        cfg.heads, cfg.ffn_width, rng);
  }
  return layers;
}

}  // namespace

GroundingModel::GroundingModel(const ModelConfig& cfg) : cfg_(cfg) {
  std::mt19937_64 rng(cfg.init_seed);
  const int64_t vocab = static_cast<int64_t>(grammar::vocabulary().size());
  text_ = TextEncoder(params_, "text", vocab, cfg.word_dim, cfg.heads, rng);
  backbone_ = Backbone(params_, "backbone", 3, cfg.sa_hidden, cfg.feature_dim, rng);
  dks_ = Dks(params_, "dks", cfg.feature_dim, cfg.word_dim, cfg.score_hidden, rng);
  layers_ = build_layers(params_, cfg_, rng);
  det_ = DetHead(params_, "heads.det", cfg.feature_dim, cfg.head_hidden, grammar::kNumCategories,
                 rng);
  refer_ = ReferHead(params_, "heads.refer", cfg.feature_dim, cfg.word_dim, cfg.head_hidden, rng);
  lang_ = LangHead(params_, "heads.lang", cfg.word_dim, grammar::kNumCategories, rng);
}

ForwardResult GroundingModel::forward(Graph& g, const PreparedScene& ps,
                                      const Options& opt) const {
  ForwardResult fr;
  fr.words = text_(g, ps.tokens);
  fr.seeds = backbone_(g, ps);

  const int64_t m = fr.seeds.count();
  const int64_t k_o = std::min(cfg_.k_o, m);
  const int64_t k_d = std::min(cfg_.k0, k_o);
  fr.dks = dks_(g, fr.seeds, fr.words, k_o, k_d);
  if (opt.ablate_dks_fps) {
    KeypointSet all = keypoints_from_seeds(fr.seeds);
    fr.dks.p0 = select_keypoints(g, all, all.features, ps.fps_baseline);
  }

  fr.tpm = run_tpm(g, layers_, fr.dks.p0, fr.words, fr.seeds, cfg_.selection_ratio,
                   opt.ablate_selection);

  fr.layer_outputs.reserve(fr.tpm.size());
  const KeypointSet* input_set = &fr.dks.p0;
  for (size_t t = 0; t < fr.tpm.size(); ++t) {
    // The layer's boxes cover its full input keypoint set, regressed from the
    // features the layer refined for those keypoints.
    KeypointSet refined;
    refined.seed_indices = input_set->seed_indices;
    refined.coords = input_set->coords;
    refined.coords_t = input_set->coords_t;
    refined.features = fr.tpm[t].refined_points;
    LayerOutputs lo;
    lo.det.pred = det_(g, refined);
    lo.det.seed_indices = refined.seed_indices;
    lo.lang_logits = lang_(g, fr.tpm[t].words);
    fr.layer_outputs.push_back(std::move(lo));
    input_set = &fr.tpm[t].selected;
  }

  fr.final_points = fr.tpm.back().selected;
  fr.refer_scores = refer_(g, fr.final_points.features, fr.tpm.back().words);
  fr.final_pred = det_(g, fr.final_points);
  fr.best_index = argtopk(fr.refer_scores.data(), 1).front();
  fr.predicted_box = prediction_boxes(fr.final_pred)[static_cast<size_t>(fr.best_index)];
  return fr;
}

LossBreakdown compute_losses(Graph& g, const ForwardResult& fr, const PreparedScene& ps,
                             const LossConfig& cfg) {
  Tensor l_vg =
      vg_loss(g, fr.refer_scores, prediction_boxes(fr.final_pred), ps.target_box, cfg);

  std::vector<double> relevance_at_candidates;
  relevance_at_candidates.reserve(fr.dks.candidate_indices.size());
  for (int64_t seed : fr.dks.candidate_indices) {
    relevance_at_candidates.push_back(ps.relevance_label[static_cast<size_t>(seed)]);
  }
  Tensor l_dks = dks_loss(g, fr.dks.object_scores, ps.object_label, fr.dks.relevance_scores,
                          relevance_at_candidates, cfg);

  std::vector<LayerDetection> layers;
  layers.reserve(fr.layer_outputs.size());
  for (const LayerOutputs& lo : fr.layer_outputs) layers.push_back(lo.det);
  Tensor l_det = det_loss(g, layers, ps);

  std::vector<Tensor> lang_logits;
  lang_logits.reserve(fr.layer_outputs.size());
  for (const LayerOutputs& lo : fr.layer_outputs) lang_logits.push_back(lo.lang_logits);
  Tensor l_lang = lang_loss(g, lang_logits, ps.target_category);

  return total_loss(g, l_vg, l_dks, l_det, l_lang, cfg);
}

}  // namespace groundsel
