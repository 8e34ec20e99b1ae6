#pragma once

#include <filesystem>

#include "crossview/model.hpp"

namespace crossview {

// JSON checkpoint: dimensions, layer order, flat float64 parameter arrays,
// the frozen flag, input standardization and seed lineage. Doubles are
// written in shortest round-trip form so save -> load is bit-exact.

void save_checkpoint(const ModelState& model, const std::filesystem::path& path);
ModelState load_checkpoint(const std::filesystem::path& path);

}  // namespace crossview
