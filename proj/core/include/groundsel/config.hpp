#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "groundsel/losses.hpp"
#include "groundsel/model.hpp"

namespace groundsel {

/// Optimization schedule. Defaults fit a full desk-scale run (500 scenes)
/// into a half-hour single-core budget; the decay points sit at 50% and 75%
/// of the run.
struct TrainConfig {
  int64_t epochs = 8;
  int64_t batch_size = 4;  // gradient accumulation across single-scene passes
  double lr = 1e-3;        // everything except the refinement stack
  double tpm_lr = 1e-4;    // parameters under the "tpm." prefix
  std::vector<int64_t> decay_epochs = {4, 6};  // decay when this many epochs are done
  double decay_factor = 0.1;
  double momentum = 0.9;
  double clip_norm = 5.0;  // global gradient norm
  uint64_t seed = 7;       // epoch shuffling stream
};

/// Everything a run needs, parsed from one flat key = value file.
struct RunConfig {
  ModelConfig model;
  LossConfig loss;
  TrainConfig train;
};

/// Parses `key = value` lines ('#' starts a comment, blank lines ignored).
/// Every key has a default, so an empty text is valid; unknown keys and
/// unparseable values throw ContractError naming the line.
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");

/// Reads and parses a config file. Missing file throws IoError.
RunConfig parse_config_file(const std::string& path);

/// One line per key: name, default, and meaning. Used by the CLI help.
std::string describe_config_keys();

}  // namespace groundsel
