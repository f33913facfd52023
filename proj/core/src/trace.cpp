#include "groundsel/trace.hpp"

#include <fstream>
#include <limits>

#include <json.hpp>

#include "groundsel/error.hpp"
#include "groundsel/geometry.hpp"

namespace groundsel {

namespace {

using nlohmann::json;

json coords_json(const std::vector<std::array<double, 3>>& coords) {
  json arr = json::array();
  for (const auto& c : coords) arr.push_back({c[0], c[1], c[2]});
  return arr;
}

json values_json(const Tensor& t) {
  json arr = json::array();
  for (double v : t.data()) arr.push_back(v);
  return arr;
}

json box_json(const Box3& b) {
  return {{"center", {b.center[0], b.center[1], b.center[2]}},
          {"size", {b.size[0], b.size[1], b.size[2]}}};
}

json stage_json(const KeypointSet& set) {
  return {{"stage", set.stage},
          {"count", set.count()},
          {"seed_indices", set.seed_indices},
          {"coords", coords_json(set.coords)}};
}

/// min / mean / max of one attention head's full map.
json head_summary(const Tensor& map) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (double v : map.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    sum += v;
  }
  return {{"min", lo}, {"mean", sum / static_cast<double>(map.size())}, {"max", hi}};
}

}  // namespace

std::string trace_sample(const GroundingModel& model, const PreparedScene& ps,
                         const GroundingModel::Options& opt) {
  Graph g(false);
  const ForwardResult fr = model.forward(g, ps, opt);

  json stages = json::array();
  stages.push_back(stage_json(keypoints_from_seeds(fr.seeds)));

  json dks_stage = stage_json(fr.dks.p0);
  dks_stage["object_scores"] = values_json(fr.dks.object_scores);
  dks_stage["candidate_indices"] = fr.dks.candidate_indices;
  dks_stage["relevance_scores"] = values_json(fr.dks.relevance_scores);
  stages.push_back(dks_stage);

  for (const TpmLayerOutput& layer : fr.tpm) {
    json st = stage_json(layer.selected);
    st["pooled_attention"] = layer.pooled;  // one entry per input keypoint
    json heads = json::array();
    for (const Tensor& map : layer.cross_attn) heads.push_back(head_summary(map));
    st["attention_heads"] = heads;
    stages.push_back(st);
  }

  const json j{
      {"schema", "groundsel-trace"},
      {"version", 1},
      {"scene_seed", ps.scene.scene_seed},
      {"description", ps.scene.description},
      {"target_category", ps.target_category},
      {"stages", stages},
      {"refer_scores", values_json(fr.refer_scores)},
      {"best_index", fr.best_index},
      {"predicted_box", box_json(fr.predicted_box)},
      {"gt_box", box_json(ps.target_box)},
      {"iou", aabb_iou(fr.predicted_box, ps.target_box)},
  };
  return j.dump(2) + "\n";
}

std::string trace_sample(const GroundingModel& model, const PreparedScene& ps) {
  return trace_sample(model, ps, GroundingModel::Options());
}

void write_trace(const std::string& path, const GroundingModel& model, const PreparedScene& ps,
                 const GroundingModel::Options& opt) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open trace file for writing: " + path);
  f << trace_sample(model, ps, opt);
  if (!f) throw IoError("failed writing trace file: " + path);
}

}  // namespace groundsel
