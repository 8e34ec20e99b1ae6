#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crossview/dataset.hpp"
#include "crossview/evaluation.hpp"
#include "crossview/model.hpp"
#include "crossview/training.hpp"

namespace crossview {

/// Everything a pipeline run needs. Serialized as JSON; see README for the schema.
struct RunConfig {
  std::uint64_t seed = 7;
  WorldConfig world;
  SplitFractions split;
  ModelConfig model;
  TrainConfig train;
  std::vector<double> thresholds = default_thresholds();
  std::size_t heatmap_rows = 48;
  std::size_t heatmap_cols = 96;
  std::filesystem::path out_dir = "out";
};

/// Parses a JSON config. Missing keys keep their defaults; unknown keys
/// and wrong types are errors naming the key.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string dump_run_config(const RunConfig& config);

/// Per-stage seeds, each a fixed function of the global seed. The seed
/// fields inside `world` and `train` are ignored by the pipeline.
struct StageSeeds {
  std::uint64_t world, split, init, pretrain, train;
};
StageSeeds stage_seeds(std::uint64_t seed);

/// Model dimensions implied by the world and model sections.
ModelConfig model_config(const RunConfig& config);

}  // namespace crossview
