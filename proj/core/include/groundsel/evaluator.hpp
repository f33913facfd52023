#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "groundsel/dataset.hpp"
#include "groundsel/model.hpp"

namespace groundsel {

struct EvalReport {
  int64_t samples = 0;
  double acc_025 = 0.0;  // fraction of samples with predicted-box IoU > 0.25
  double acc_05 = 0.0;   // ... IoU > 0.5; never exceeds acc_025

  // Split by whether the target's category occurs once or many times.
  int64_t unique_count = 0;
  int64_t multiple_count = 0;
  double unique_acc_025 = 0.0;
  double unique_acc_05 = 0.0;
  double multiple_acc_025 = 0.0;
  double multiple_acc_05 = 0.0;

  // Mean fraction of keypoints inside the target box, one entry per
  // selection stage: the filtered P_0 followed by each refinement layer.
  std::vector<double> stage_ratios;
  // The same fraction for a farthest-point sample of the P_0 budget.
  double fps_ratio = 0.0;
};

/// Fraction of values strictly above the threshold.
double accuracy_above(const std::vector<double>& ious, double threshold);

/// Runs the full pipeline on every scene, takes the box at the top referring
/// score, and aggregates IoU>threshold accuracies plus the per-stage
/// target-keypoint ratios. Pure given the model parameters.
EvalReport evaluate(const GroundingModel& model, const std::vector<PreparedScene>& dataset,
                    const GroundingModel::Options& opt);
EvalReport evaluate(const GroundingModel& model, const std::vector<PreparedScene>& dataset);

struct RatioProbe {
  std::vector<double> stage_ratios;  // P_0 then one entry per refinement layer
  double fps_ratio = 0.0;
};

/// Just the target-keypoint ratio portion of evaluate.
RatioProbe target_ratio_probe(const GroundingModel& model,
                              const std::vector<PreparedScene>& dataset,
                              const GroundingModel::Options& opt);
RatioProbe target_ratio_probe(const GroundingModel& model,
                              const std::vector<PreparedScene>& dataset);

/// Schema-versioned JSON rendering of a report; identical reports render to
/// identical bytes.
std::string metrics_json(const EvalReport& report);
void write_metrics(const std::string& path, const EvalReport& report);

}  // namespace groundsel
