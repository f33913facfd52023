#pragma once

#include <string>

#include "groundsel/nn.hpp"

namespace groundsel {

/// Writes every parameter to a version-tagged text file. Values are hex
/// floats, so a load restores them bit for bit.
///
/// Format: a `groundsel-checkpoint 1` header line, then per parameter one
/// line `name rank dims...` followed by one line of space-separated values.
void save_checkpoint(const std::string& path, const ParamMap& params);

/// Restores parameter values in place. The file must cover exactly the
/// parameters registered in `params` with matching shapes; any mismatch,
/// unknown name, or parse failure throws IoError naming the offender.
void load_checkpoint(const std::string& path, ParamMap& params);

}  // namespace groundsel
