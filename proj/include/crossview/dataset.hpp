#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "crossview/ground.hpp"

namespace crossview {

struct GeoPoint {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees
  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

struct BoundingBox {
  double lat_min = 25.0;
  double lat_max = 49.0;
  double lon_min = -125.0;
  double lon_max = -67.0;
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct GeoRecord {
  std::int64_t id = 0;
  GeoPoint location;
  FeatureVector feature;
  GroundSample ground;
  std::optional<int> latent_class;  // set for synthetic worlds only
  friend bool operator==(const GeoRecord&, const GeoRecord&) = default;
};

/// Dimensions shared by every record of a dataset.
struct DatasetHeader {
  std::size_t feature_dim = 0;
  std::size_t scene_dim = 0;
  std::size_t image_dim = 0;
  std::size_t count_dim = 0;
  friend bool operator==(const DatasetHeader&, const DatasetHeader&) = default;
};

struct Dataset {
  DatasetHeader header;
  std::vector<GeoRecord> records;
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct WorldConfig {
  int num_classes = 20;
  int num_records = 2000;
  std::size_t feature_dim = 32;
  std::size_t scene_dim = 16;
  std::size_t image_dim = 24;
  std::size_t count_dim = 8;
  double feature_noise_sigma = 0.3;
  double class_alpha_scale = 10.0;
  double count_rate_scale = 4.0;
  double location_spread = 1.0;  // degrees, std dev around the class centre
  BoundingBox geo_extent;
  std::uint64_t seed = 7;
};

/// Synthetic world with latent classes. Each class has a prototype feature,
/// Dirichlet parameters for both label spaces, Poisson rates and a
/// geographic centre; records sample around their class.
struct World {
  Dataset dataset;
  std::vector<FeatureVector> prototypes;
  std::vector<DirichletParams> scene_alpha;
  std::vector<DirichletParams> image_alpha;
  std::vector<PoissonParams> count_rates;
  std::vector<GeoPoint> centers;
};

void validate(const WorldConfig& config);
World generate_world(const WorldConfig& config);

struct SplitFractions {
  double train = 0.93;
  double val = 0.02;
  double test = 0.05;
};

struct Split {
  std::vector<GeoRecord> train;
  std::vector<GeoRecord> val;
  std::vector<GeoRecord> test;
};

/// Seeded shuffle, then val/test take floor(N * f) records each and train
/// takes the rest.
Split split_dataset(const std::vector<GeoRecord>& records, const SplitFractions& fractions,
                    std::uint64_t seed);

/// Error raised while reading a dataset file; names the line and field.
class DatasetParseError : public std::runtime_error {
 public:
  DatasetParseError(std::size_t line, const std::string& field, const std::string& message);
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

/// Tolerance applied to distribution sums when ingesting external files.
inline constexpr double kIngestSimplexTolerance = 1e-6;

// Line-delimited JSON: one header line with the dimensions, then one record per line.
void save_records(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_records(const std::filesystem::path& path);

}  // namespace crossview
