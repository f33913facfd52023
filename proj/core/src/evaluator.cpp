#include "groundsel/evaluator.hpp"

#include <fstream>

#include <json.hpp>

#include "groundsel/error.hpp"
#include "groundsel/geometry.hpp"

namespace groundsel {

namespace {

double in_target_fraction(const std::vector<int64_t>& seed_indices,
                          const std::vector<uint8_t>& in_target) {
  if (seed_indices.empty()) return 0.0;
  int64_t hits = 0;
  for (int64_t s : seed_indices) {
    if (in_target[static_cast<size_t>(s)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(seed_indices.size());
}

struct SampleOutcome {
  double iou = 0.0;
  bool unique_split = false;
  std::vector<double> stage_fractions;  // P_0 then each refinement layer
  double fps_fraction = 0.0;
};

SampleOutcome run_sample(const GroundingModel& model, const PreparedScene& ps,
                         const GroundingModel::Options& opt) {
  Graph g(false);  // evaluation needs no tape
  const ForwardResult fr = model.forward(g, ps, opt);

  SampleOutcome out;
  out.iou = aabb_iou(fr.predicted_box, ps.target_box);
  out.unique_split = ps.unique_split;
  out.stage_fractions.reserve(1 + fr.tpm.size());
  out.stage_fractions.push_back(in_target_fraction(fr.dks.p0.seed_indices, ps.in_target));
  for (const TpmLayerOutput& layer : fr.tpm) {
    out.stage_fractions.push_back(in_target_fraction(layer.selected.seed_indices, ps.in_target));
  }
  out.fps_fraction = in_target_fraction(ps.fps_baseline, ps.in_target);
  return out;
}

std::vector<SampleOutcome> run_dataset(const GroundingModel& model,
                                       const std::vector<PreparedScene>& dataset,
                                       const GroundingModel::Options& opt) {
  if (dataset.empty()) throw ContractError("evaluate: dataset is empty");
  std::vector<SampleOutcome> outcomes;
  outcomes.reserve(dataset.size());
  for (const PreparedScene& ps : dataset) outcomes.push_back(run_sample(model, ps, opt));
  for (const SampleOutcome& o : outcomes) {
    if (o.stage_fractions.size() != outcomes.front().stage_fractions.size()) {
      throw ContractError("evaluate: inconsistent stage count across samples");
    }
  }
  return outcomes;
}

}  // namespace

double accuracy_above(const std::vector<double>& ious, double threshold) {
  if (ious.empty()) return 0.0;
  int64_t hits = 0;
  for (double v : ious) {
    if (v > threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ious.size());
}

EvalReport evaluate(const GroundingModel& model, const std::vector<PreparedScene>& dataset,
                    const GroundingModel::Options& opt) {
  const std::vector<SampleOutcome> outcomes = run_dataset(model, dataset, opt);

  EvalReport rep;
  rep.samples = static_cast<int64_t>(outcomes.size());

  std::vector<double> all, unique, multiple;
  for (const SampleOutcome& o : outcomes) {
    all.push_back(o.iou);
    (o.unique_split ? unique : multiple).push_back(o.iou);
  }
  rep.acc_025 = accuracy_above(all, 0.25);
  rep.acc_05 = accuracy_above(all, 0.5);
  rep.unique_count = static_cast<int64_t>(unique.size());
  rep.multiple_count = static_cast<int64_t>(multiple.size());
  rep.unique_acc_025 = accuracy_above(unique, 0.25);
  rep.unique_acc_05 = accuracy_above(unique, 0.5);
  rep.multiple_acc_025 = accuracy_above(multiple, 0.25);
  rep.multiple_acc_05 = accuracy_above(multiple, 0.5);

  rep.stage_ratios.assign(outcomes.front().stage_fractions.size(), 0.0);
  for (const SampleOutcome& o : outcomes) {
    for (size_t t = 0; t < o.stage_fractions.size(); ++t) {
      rep.stage_ratios[t] += o.stage_fractions[t];
    }
    rep.fps_ratio += o.fps_fraction;
  }
  for (double& r : rep.stage_ratios) r /= static_cast<double>(outcomes.size());
  rep.fps_ratio /= static_cast<double>(outcomes.size());
  return rep;
}

EvalReport evaluate(const GroundingModel& model, const std::vector<PreparedScene>& dataset) {
  return evaluate(model, dataset, GroundingModel::Options());
}

RatioProbe target_ratio_probe(const GroundingModel& model,
                              const std::vector<PreparedScene>& dataset,
                              const GroundingModel::Options& opt) {
  const std::vector<SampleOutcome> outcomes = run_dataset(model, dataset, opt);
  RatioProbe probe;
  probe.stage_ratios.assign(outcomes.front().stage_fractions.size(), 0.0);
  for (const SampleOutcome& o : outcomes) {
    for (size_t t = 0; t < o.stage_fractions.size(); ++t) {
      probe.stage_ratios[t] += o.stage_fractions[t];
    }
    probe.fps_ratio += o.fps_fraction;
  }
  for (double& r : probe.stage_ratios) r /= static_cast<double>(outcomes.size());
  probe.fps_ratio /= static_cast<double>(outcomes.size());
  return probe;
}

RatioProbe target_ratio_probe(const GroundingModel& model,
                              const std::vector<PreparedScene>& dataset) {
  return target_ratio_probe(model, dataset, GroundingModel::Options());
}

std::string metrics_json(const EvalReport& report) {
  nlohmann::json j{
      {"schema", "groundsel-metrics"},
      {"version", 1},
      {"samples", report.samples},
      {"acc_025", report.acc_025},
      {"acc_05", report.acc_05},
      {"unique", {{"count", report.unique_count},
                  {"acc_025", report.unique_acc_025},
                  {"acc_05", report.unique_acc_05}}},
      {"multiple", {{"count", report.multiple_count},
                    {"acc_025", report.multiple_acc_025},
                    {"acc_05", report.multiple_acc_05}}},
      {"stage_ratios", report.stage_ratios},
      {"fps_ratio", report.fps_ratio},
  };
  return j.dump(2) + "\n";
}

void write_metrics(const std::string& path, const EvalReport& report) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open metrics file for writing: " + path);
  f << metrics_json(report);
  if (!f) throw IoError("failed writing metrics file: " + path);
}

}  // namespace groundsel
