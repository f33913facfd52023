#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "groundsel/config.hpp"
#include "groundsel/dataset.hpp"
#include "groundsel/model.hpp"

namespace groundsel {

/// Loss components of one optimizer step, averaged over the step's scenes.
struct StepRecord {
  int64_t step = 0;   // 1-based optimizer step
  int64_t epoch = 0;  // 1-based epoch this step belongs to
  double vg = 0.0;
  double dks = 0.0;
  double det = 0.0;
  double lang = 0.0;
  double total = 0.0;
};

/// Mean of the step records within one epoch.
struct EpochRecord {
  int64_t epoch = 0;
  double vg = 0.0;
  double dks = 0.0;
  double det = 0.0;
  double lang = 0.0;
  double total = 0.0;
};

struct TrainResult {
  std::vector<StepRecord> curve;    // one entry per optimizer step
  std::vector<EpochRecord> epochs;  // one entry per epoch
};

/// Momentum gradient descent over the prepared scenes: each step accumulates
/// gradients from `batch_size` single-scene passes (the trailing step of an
/// epoch may be smaller), averages them, clips the global gradient norm, and
/// updates two learning-rate groups — parameters under the "tpm." prefix use
/// tpm_lr, everything else uses lr; both decay by decay_factor after each
/// epoch listed in decay_epochs. The scene order reshuffles every epoch from
/// a stream seeded by cfg.seed, so training is deterministic given the seed.
/// A non-finite total loss aborts with DivergenceError. `on_step`, when set,
/// observes every record as it is produced.
TrainResult train_model(GroundingModel& model, const std::vector<PreparedScene>& dataset,
                        const TrainConfig& tc, const LossConfig& lc,
                        const std::function<void(const StepRecord&)>& on_step);
TrainResult train_model(GroundingModel& model, const std::vector<PreparedScene>& dataset,
                        const TrainConfig& tc, const LossConfig& lc);

/// Writes the loss curve as line-oriented JSON: a schema header object, then
/// one record per optimizer step and one summary record per epoch, in order.
void write_loss_log(const std::string& path, const TrainResult& result);

}  // namespace groundsel
