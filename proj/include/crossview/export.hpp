#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "crossview/evaluation.hpp"
#include "crossview/training.hpp"

namespace crossview {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

void write_curve_csv(const std::filesystem::path& path, const LocalizationCurve& curve);

/// epoch, train_{scene,image,counts,total}_nll, val_{...}_nll. Missing
/// validation values are left empty.
void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

struct ResultRow {
  std::int64_t id = 0;
  GeoPoint location;
  double score = 0.0;
};
void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows);

/// Plain PGM (P2), max value 255, min-max normalized over the grid.
void write_heatmap_pgm(const std::filesystem::path& path, const Heatmap& map);
/// Raw cell scores, one grid row per line.
void write_heatmap_csv(const std::filesystem::path& path, const Heatmap& map);
/// Georeferencing: bounding box, grid shape, fill value and score range.
void write_heatmap_sidecar(const std::filesystem::path& path, const Heatmap& map);

/// Min-max normalized gray levels in [0, 255], row-major.
std::vector<int> heatmap_gray_levels(const Heatmap& map);

}  // namespace crossview
