#include "crossview/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "json.hpp"

namespace crossview {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "crossview-dataset";
constexpr int kVersion = 1;

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument("world config: " + message);
}

std::vector<double> positive_vector(Rng& rng, std::size_t n, double scale, double offset) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * (offset + rng.gamma(1.0));
  return v;
}

template <typename T>
T field_as(const json& record, const char* field, std::size_t line) {
  auto it = record.find(field);
  if (it == record.end()) throw DatasetParseError(line, field, "missing field");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw DatasetParseError(line, field, std::string("wrong type: ") + e.what());
  }
}

void require_len(std::size_t got, std::size_t want, std::size_t line, const char* field) {
  if (got != want) {
    throw DatasetParseError(line, field,
                            "dimension " + std::to_string(got) +
                                " does not match header dimension " + std::to_string(want));
  }
}

SimplexVector parse_simplex(const json& record, const char* field, std::size_t want,
                            std::size_t line) {
  SimplexVector x{field_as<std::vector<double>>(record, field, line)};
  require_len(x.p.size(), want, line, field);
  try {
    validate(x, kIngestSimplexTolerance);
  } catch (const std::domain_error& e) {
    throw DatasetParseError(line, field, std::string("normalization error: ") + e.what());
  }
  return x;
}

}  // namespace

DatasetParseError::DatasetParseError(std::size_t line, const std::string& field,
                                     const std::string& message)
    : std::runtime_error("dataset line " + std::to_string(line) + ", field '" + field +
                         "': " + message),
      line_(line),
      field_(field) {}

void validate(const WorldConfig& c) {
  require(c.num_classes > 0, "num_classes must be positive");
  require(c.num_records > 0, "num_records must be positive");
  require(c.feature_dim > 0, "feature_dim must be positive");
  require(c.scene_dim >= 2 && c.image_dim >= 2, "label spaces need at least 2 categories");
  require(c.count_dim > 0, "count_dim must be positive");
  require(c.feature_noise_sigma >= 0.0, "feature_noise_sigma must be >= 0");
  require(c.class_alpha_scale > 0.0, "class_alpha_scale must be > 0");
  require(c.count_rate_scale > 0.0, "count_rate_scale must be > 0");
  require(c.location_spread >= 0.0, "location_spread must be >= 0");
  require(c.geo_extent.lat_max > c.geo_extent.lat_min &&
              c.geo_extent.lon_max > c.geo_extent.lon_min,
          "geo_extent must have positive area");
}

World generate_world(const WorldConfig& config) {
  validate(config);
  Rng rng(config.seed);
  World world;
  const auto classes = static_cast<std::size_t>(config.num_classes);
  const BoundingBox& box = config.geo_extent;
  for (std::size_t c = 0; c < classes; ++c) {
    FeatureVector proto(config.feature_dim);
    for (double& v : proto) v = rng.normal();
    world.prototypes.push_back(std::move(proto));
    world.scene_alpha.push_back({positive_vector(rng, config.scene_dim, config.class_alpha_scale, 0.05)});
    world.image_alpha.push_back({positive_vector(rng, config.image_dim, config.class_alpha_scale, 0.05)});
    world.count_rates.push_back({positive_vector(rng, config.count_dim, config.count_rate_scale, 0.05)});
    world.centers.push_back({rng.uniform(box.lat_min, box.lat_max), rng.uniform(box.lon_min, box.lon_max)});
  }

  Dataset& ds = world.dataset;
  ds.header = {config.feature_dim, config.scene_dim, config.image_dim, config.count_dim};
  ds.records.reserve(static_cast<std::size_t>(config.num_records));
  for (int i = 0; i < config.num_records; ++i) {
    const std::size_t c = static_cast<std::size_t>(i) % classes;
    GeoRecord r;
    r.id = i;
    r.latent_class = static_cast<int>(c);
    r.location.lat = std::clamp(rng.normal(world.centers[c].lat, config.location_spread),
                                box.lat_min, box.lat_max);
    r.location.lon = std::clamp(rng.normal(world.centers[c].lon, config.location_spread),
                                box.lon_min, box.lon_max);
    r.feature = world.prototypes[c];
    if (config.feature_noise_sigma > 0.0) {
      for (double& v : r.feature) v += config.feature_noise_sigma * rng.normal();
    }
    r.ground.scene_dist = sample_dirichlet(world.scene_alpha[c], rng);
    r.ground.image_dist = sample_dirichlet(world.image_alpha[c], rng);
    r.ground.counts = sample_poisson(world.count_rates[c], rng);
    ds.records.push_back(std::move(r));
  }
  return world;
}

Split split_dataset(const std::vector<GeoRecord>& records, const SplitFractions& f,
                    std::uint64_t seed) {
  if (!(f.train > 0.0 && f.val > 0.0 && f.test > 0.0)) {
    throw std::invalid_argument("split_dataset: every fraction must be positive");
  }
  if (std::fabs(f.train + f.val + f.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split_dataset: fractions must sum to 1");
  }
  const std::size_t n = records.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  // Small slack so that e.g. 100 * 0.29 does not floor to 28.
  const auto count = [n](double fraction) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction + 1e-9));
  };
  const std::size_t n_val = count(f.val);
  const std::size_t n_test = count(f.test);
  const std::size_t n_train = n - n_val - n_test;
  Split split;
  for (std::size_t i = 0; i < n; ++i) {
    const GeoRecord& r = records[order[i]];
    if (i < n_train) {
      split.train.push_back(r);
    } else if (i < n_train + n_val) {
      split.val.push_back(r);
    } else {
      split.test.push_back(r);
    }
  }
  return split;
}

void save_records(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_records: cannot open " + path.string());
  const DatasetHeader& h = dataset.header;
  json header{{"format", kFormat}, {"version", kVersion}, {"d", h.feature_dim},
              {"k1", h.scene_dim}, {"k2", h.image_dim},   {"m", h.count_dim}};
  out << header.dump() << '\n';
  for (const GeoRecord& r : dataset.records) {
    json j{{"id", r.id},
           {"lat", r.location.lat},
           {"lon", r.location.lon},
           {"feature", r.feature},
           {"scene_dist", r.ground.scene_dist.p},
           {"image_dist", r.ground.image_dist.p},
           {"counts", r.ground.counts.k}};
    if (r.latent_class) j["latent_class"] = *r.latent_class;
    out << j.dump() << '\n';
  }
  if (!out) throw std::runtime_error("save_records: write failed for " + path.string());
}

Dataset load_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_records: cannot open " + path.string());
  Dataset ds;
  std::string text;
  std::size_t line = 0;
  bool have_header = false;
  std::set<std::int64_t> ids;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw DatasetParseError(line, "<line>", std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw DatasetParseError(line, "<line>", "expected a JSON object");
    if (!have_header) {
      if (field_as<std::string>(j, "format", line) != kFormat) {
        throw DatasetParseError(line, "format", "not a crossview dataset");
      }
      if (field_as<int>(j, "version", line) != kVersion) {
        throw DatasetParseError(line, "version", "unsupported version");
      }
      ds.header.feature_dim = field_as<std::size_t>(j, "d", line);
      ds.header.scene_dim = field_as<std::size_t>(j, "k1", line);
      ds.header.image_dim = field_as<std::size_t>(j, "k2", line);
      ds.header.count_dim = field_as<std::size_t>(j, "m", line);
      have_header = true;
      continue;
    }
    GeoRecord r;
    r.id = field_as<std::int64_t>(j, "id", line);
    if (!ids.insert(r.id).second) {
      throw DatasetParseError(line, "id", "duplicate id " + std::to_string(r.id));
    }
    r.location.lat = field_as<double>(j, "lat", line);
    r.location.lon = field_as<double>(j, "lon", line);
    if (!std::isfinite(r.location.lat) || !std::isfinite(r.location.lon)) {
      throw DatasetParseError(line, "lat/lon", "coordinates must be finite");
    }
    r.feature = field_as<std::vector<double>>(j, "feature", line);
    require_len(r.feature.size(), ds.header.feature_dim, line, "feature");
    r.ground.scene_dist = parse_simplex(j, "scene_dist", ds.header.scene_dim, line);
    r.ground.image_dist = parse_simplex(j, "image_dist", ds.header.image_dim, line);
    r.ground.counts.k = field_as<std::vector<std::int64_t>>(j, "counts", line);
    require_len(r.ground.counts.k.size(), ds.header.count_dim, line, "counts");
    for (auto k : r.ground.counts.k) {
      if (k < 0) throw DatasetParseError(line, "counts", "counts must be non-negative");
    }
    if (j.contains("latent_class")) r.latent_class = field_as<int>(j, "latent_class", line);
    ds.records.push_back(std::move(r));
  }
  if (!have_header) throw DatasetParseError(line, "<header>", "file has no header line");
  return ds;
}

}  // namespace crossview
