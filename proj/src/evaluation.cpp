#include "crossview/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace crossview {

namespace {

void require_same(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(got) + " vs " + std::to_string(want) + ")");
  }
}

std::size_t label_dim(const ReferenceEntry& e, Head head) {
  switch (head) {
    case Head::scene: return e.params.scene.alpha.size();
    case Head::image: return e.params.image.alpha.size();
    case Head::counts: return e.params.counts.lambda.size();
  }
  return 0;
}

}  // namespace

std::size_t ReferenceDB::index_of(std::int64_t id) const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].id == id) return i;
  }
  throw std::out_of_range("reference database has no entry with id " + std::to_string(id));
}

ReferenceDB build_reference_db(const ModelState& model, const std::vector<GeoRecord>& records) {
  if (records.empty()) throw std::invalid_argument("build_reference_db: no records");
  ReferenceDB db;
  db.entries.reserve(records.size());
  for (const auto& r : records) {
    db.entries.push_back({r.id, r.location, forward(model, r.feature)});
  }
  return db;
}

double score(const GroundSample& ground, const ReferenceEntry& entry, Head head,
             double simplex_eps) {
  switch (head) {
    case Head::scene:
      require_same(ground.scene_dist.p.size(), entry.params.scene.alpha.size(), "score scene");
      return dirichlet_log_pdf(entry.params.scene, smooth_simplex(ground.scene_dist.p, simplex_eps));
    case Head::image:
      require_same(ground.image_dist.p.size(), entry.params.image.alpha.size(), "score image");
      return dirichlet_log_pdf(entry.params.image, smooth_simplex(ground.image_dist.p, simplex_eps));
    case Head::counts:
      require_same(ground.counts.k.size(), entry.params.counts.lambda.size(), "score counts");
      return poisson_log_pmf(entry.params.counts, ground.counts);
  }
  throw std::invalid_argument("score: unknown head");
}

std::vector<double> score_all(const GroundSample& ground, const ReferenceDB& db, Head head,
                              double simplex_eps) {
  std::vector<double> scores;
  scores.reserve(db.entries.size());
  if (head == Head::counts) {
    for (const auto& e : db.entries) scores.push_back(score(ground, e, head, simplex_eps));
    return scores;
  }
  // Smooth the query once.
  const SimplexVector& raw = head == Head::scene ? ground.scene_dist : ground.image_dist;
  const SimplexVector x = smooth_simplex(raw.p, simplex_eps);
  for (const auto& e : db.entries) {
    const DirichletParams& alpha = head == Head::scene ? e.params.scene : e.params.image;
    require_same(x.p.size(), alpha.alpha.size(), "score_all");
    scores.push_back(dirichlet_log_pdf(alpha, x));
  }
  return scores;
}

std::vector<ScoredId> retrieve_topk(const GroundSample& ground, const ReferenceDB& db, Head head,
                                    std::size_t k) {
  if (k > db.size()) {
    throw std::invalid_argument("retrieve_topk: k = " + std::to_string(k) +
                                " exceeds database size |db| = " + std::to_string(db.size()));
  }
  const std::vector<double> scores = score_all(ground, db, head);
  std::vector<ScoredId> ranked;
  ranked.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) ranked.push_back({db.entries[i].id, scores[i]});
  const auto better = [](const ScoredId& a, const ScoredId& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  };
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end(),
                    better);
  ranked.resize(k);
  return ranked;
}

double rank_fraction_pessimistic(std::span<const double> scores, std::size_t true_index) {
  if (scores.size() < 2) throw std::invalid_argument("rank fraction needs at least 2 entries");
  if (true_index >= scores.size()) throw std::out_of_range("rank fraction: true index out of range");
  const double target = scores[true_index];
  std::size_t above = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i != true_index && scores[i] >= target) ++above;
  }
  return static_cast<double>(above) / static_cast<double>(scores.size() - 1);
}

double rank_fraction_randomized(std::span<const double> scores, std::size_t true_index, Rng& rng) {
  if (scores.size() < 2) throw std::invalid_argument("rank fraction needs at least 2 entries");
  if (true_index >= scores.size()) throw std::out_of_range("rank fraction: true index out of range");
  const double target = scores[true_index];
  std::size_t above = 0;
  std::size_t ties = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i == true_index) continue;
    if (scores[i] > target) {
      ++above;
    } else if (scores[i] == target) {
      ++ties;
    }
  }
  above += static_cast<std::size_t>(rng.below(ties + 1));
  return static_cast<double>(above) / static_cast<double>(scores.size() - 1);
}

double localize(const GroundSample& ground, std::int64_t true_id, const ReferenceDB& db, Head head) {
  const std::size_t true_index = db.index_of(true_id);
  const std::vector<double> scores = score_all(ground, db, head);
  return rank_fraction_pessimistic(scores, true_index);
}

double LocalizationCurve::accuracy_at(double threshold) const {
  for (const auto& p : points) {
    if (p.threshold == threshold) return p.accuracy;
  }
  throw std::out_of_range("curve has no point at threshold " + std::to_string(threshold));
}

LocalizationCurve accuracy_curve(std::span<const double> ranks, std::span<const double> thresholds) {
  if (ranks.empty()) throw std::invalid_argument("accuracy_curve: no ranks");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] >= 0.0 && thresholds[i] <= 1.0)) {
      throw std::invalid_argument("accuracy_curve: thresholds must lie in [0, 1]");
    }
    if (i > 0 && !(thresholds[i] > thresholds[i - 1])) {
      throw std::invalid_argument("accuracy_curve: thresholds must be strictly increasing");
    }
  }
  std::vector<double> sorted(ranks.begin(), ranks.end());
  std::sort(sorted.begin(), sorted.end());
  LocalizationCurve curve;
  const double n = static_cast<double>(sorted.size());
  for (double t : thresholds) {
    const auto hits = std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
    curve.points.push_back({t, static_cast<double>(hits) / n});
  }
  return curve;
}

std::vector<double> default_thresholds() {
  std::vector<double> t{0.01, 0.02, 0.05};
  for (int i = 1; i <= 10; ++i) t.push_back(i / 10.0);
  return t;
}

bool cell_of(const HeatmapGrid& grid, const GeoPoint& p, std::size_t& row, std::size_t& col) {
  const BoundingBox& b = grid.box;
  if (p.lat < b.lat_min || p.lat > b.lat_max || p.lon < b.lon_min || p.lon > b.lon_max) {
    return false;
  }
  const double fr = (b.lat_max - p.lat) / (b.lat_max - b.lat_min) * static_cast<double>(grid.rows);
  const double fc = (p.lon - b.lon_min) / (b.lon_max - b.lon_min) * static_cast<double>(grid.cols);
  row = std::min(grid.rows - 1, static_cast<std::size_t>(fr));
  col = std::min(grid.cols - 1, static_cast<std::size_t>(fc));
  return true;
}

GeoPoint cell_center(const HeatmapGrid& grid, std::size_t row, std::size_t col) {
  const BoundingBox& b = grid.box;
  const double cell_h = (b.lat_max - b.lat_min) / static_cast<double>(grid.rows);
  const double cell_w = (b.lon_max - b.lon_min) / static_cast<double>(grid.cols);
  return {b.lat_max - (static_cast<double>(row) + 0.5) * cell_h,
          b.lon_min + (static_cast<double>(col) + 0.5) * cell_w};
}

Heatmap heatmap(const GroundSample& ground, const ReferenceDB& db, Head head,
                const HeatmapGrid& grid) {
  const BoundingBox& b = grid.box;
  if (!(b.lat_max > b.lat_min && b.lon_max > b.lon_min)) {
    throw std::invalid_argument("heatmap: bounding box has zero area");
  }
  if (grid.rows == 0 || grid.cols == 0) throw std::invalid_argument("heatmap: grid must be non-empty");
  const std::vector<double> scores = score_all(ground, db, head);
  Heatmap map;
  map.grid = grid;
  constexpr double kUnset = -std::numeric_limits<double>::infinity();
  map.cells.assign(grid.rows * grid.cols, kUnset);
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    std::size_t r = 0, c = 0;
    if (!cell_of(grid, db.entries[i].location, r, c)) continue;
    double& cell = map.cells[r * grid.cols + c];
    cell = std::max(cell, scores[i]);
    lowest = std::min(lowest, scores[i]);
  }
  map.fill = std::isfinite(lowest) ? lowest - 1.0 : 0.0;
  for (double& cell : map.cells) {
    if (cell == kUnset) cell = map.fill;
  }
  return map;
}

double label_score(const ReferenceEntry& entry, const LabelRef& label) {
  const std::size_t dim = label_dim(entry, label.head);
  if (label.index >= dim) {
    throw std::out_of_range(std::string("label index ") + std::to_string(label.index) +
                            " out of range for head " + head_name(label.head) + " (size " +
                            std::to_string(dim) + ")");
  }
  switch (label.head) {
    case Head::scene: return dirichlet_mean(entry.params.scene).p[label.index];
    case Head::image: return dirichlet_mean(entry.params.image).p[label.index];
    case Head::counts: return entry.params.counts.lambda[label.index];
  }
  return 0.0;
}

AttributeSearchResult attribute_search(const ReferenceDB& db, const LabelRef& primary,
                                       const LabelRef& secondary, std::size_t top_n) {
  std::vector<AttributeHit> hits;
  hits.reserve(db.entries.size());
  for (const auto& e : db.entries) {
    hits.push_back({e.id, e.location, label_score(e, primary), label_score(e, secondary)});
  }
  std::stable_sort(hits.begin(), hits.end(), [](const AttributeHit& a, const AttributeHit& b) {
    return a.primary != b.primary ? a.primary > b.primary : a.id < b.id;
  });
  hits.resize(std::min(top_n, hits.size()));
  AttributeSearchResult result;
  result.selection = hits;
  std::stable_sort(hits.begin(), hits.end(), [](const AttributeHit& a, const AttributeHit& b) {
    return a.secondary < b.secondary;
  });
  result.ordered = std::move(hits);
  return result;
}

}  // namespace crossview
