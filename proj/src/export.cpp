#include "crossview/export.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace crossview {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_curve_csv(const std::filesystem::path& path, const LocalizationCurve& curve) {
  auto out = open_out(path);
  out << "threshold,accuracy\n";
  for (const auto& p : curve.points) {
    out << format_double(p.threshold) << ',' << format_double(p.accuracy) << '\n';
  }
}

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  auto out = open_out(path);
  out << "epoch,train_scene_nll,train_image_nll,train_counts_nll,train_total_nll,"
         "val_scene_nll,val_image_nll,val_counts_nll,val_total_nll\n";
  for (const auto& rec : history) {
    out << rec.epoch << ',' << format_double(rec.train.scene) << ','
        << format_double(rec.train.image) << ',' << format_double(rec.train.counts) << ','
        << format_double(rec.train.total);
    if (rec.val) {
      out << ',' << format_double(rec.val->scene) << ',' << format_double(rec.val->image) << ','
          << format_double(rec.val->counts) << ',' << format_double(rec.val->total);
    } else {
      out << ",,,,";
    }
    out << '\n';
  }
}

void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
  auto out = open_out(path);
  out << "id,lat,lon,score\n";
  for (const auto& r : rows) {
    out << r.id << ',' << format_double(r.location.lat) << ',' << format_double(r.location.lon)
        << ',' << format_double(r.score) << '\n';
  }
}

std::vector<int> heatmap_gray_levels(const Heatmap& map) {
  const auto [lo, hi] = std::minmax_element(map.cells.begin(), map.cells.end());
  std::vector<int> levels(map.cells.size(), 0);
  if (lo == map.cells.end() || !(*hi > *lo)) return levels;
  const double range = *hi - *lo;
  for (std::size_t i = 0; i < map.cells.size(); ++i) {
    levels[i] = static_cast<int>(std::lround((map.cells[i] - *lo) / range * 255.0));
  }
  return levels;
}

void write_heatmap_pgm(const std::filesystem::path& path, const Heatmap& map) {
  auto out = open_out(path);
  const std::vector<int> levels = heatmap_gray_levels(map);
  out << "P2\n" << map.grid.cols << ' ' << map.grid.rows << "\n255\n";
  for (std::size_t r = 0; r < map.grid.rows; ++r) {
    for (std::size_t c = 0; c < map.grid.cols; ++c) {
      if (c > 0) out << ' ';
      out << levels[r * map.grid.cols + c];
    }
    out << '\n';
  }
}

void write_heatmap_csv(const std::filesystem::path& path, const Heatmap& map) {
  auto out = open_out(path);
  for (std::size_t r = 0; r < map.grid.rows; ++r) {
    for (std::size_t c = 0; c < map.grid.cols; ++c) {
      if (c > 0) out << ',';
      out << format_double(map.at(r, c));
    }
    out << '\n';
  }
}

void write_heatmap_sidecar(const std::filesystem::path& path, const Heatmap& map) {
  const auto [lo, hi] = std::minmax_element(map.cells.begin(), map.cells.end());
  nlohmann::json j{{"rows", map.grid.rows},
                   {"cols", map.grid.cols},
                   {"row_order", "north_to_south"},
                   {"bbox",
                    {{"lat_min", map.grid.box.lat_min},
                     {"lat_max", map.grid.box.lat_max},
                     {"lon_min", map.grid.box.lon_min},
                     {"lon_max", map.grid.box.lon_max}}},
                   {"fill", map.fill},
                   {"score_min", lo == map.cells.end() ? 0.0 : *lo},
                   {"score_max", hi == map.cells.end() ? 0.0 : *hi}};
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace crossview
