#pragma once

#include <string>

#include "groundsel/dataset.hpp"
#include "groundsel/model.hpp"

namespace groundsel {

/// JSON record of one sample's pipeline walk: a schema version, the stage
/// list (seed snapshot, the filtered set, then one entry per refinement
/// layer) carrying seed indices and coordinates, the keypoint scores and
/// per-layer pooled attention that drove each selection, per-head attention
/// summaries, and the predicted vs ground-truth box with their IoU.
std::string trace_sample(const GroundingModel& model, const PreparedScene& ps,
                         const GroundingModel::Options& opt);
std::string trace_sample(const GroundingModel& model, const PreparedScene& ps);

void write_trace(const std::string& path, const GroundingModel& model, const PreparedScene& ps,
                 const GroundingModel::Options& opt);

}  // namespace groundsel
