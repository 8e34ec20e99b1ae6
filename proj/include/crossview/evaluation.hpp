#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "crossview/dataset.hpp"
#include "crossview/model.hpp"

namespace crossview {

struct ReferenceEntry {
  std::int64_t id = 0;
  GeoPoint location;
  Prediction params;
  friend bool operator==(const ReferenceEntry&, const ReferenceEntry&) = default;
};

/// Predicted parameters for every overhead record, in input order.
struct ReferenceDB {
  std::vector<ReferenceEntry> entries;

  /// Index of `id` in `entries`; throws std::out_of_range when absent.
  std::size_t index_of(std::int64_t id) const;
  std::size_t size() const { return entries.size(); }
  friend bool operator==(const ReferenceDB&, const ReferenceDB&) = default;
};

ReferenceDB build_reference_db(const ModelState& model, const std::vector<GeoRecord>& records);

/// Log-likelihood of a ground sample under one head of an entry. Dirichlet
/// heads smooth the ground distribution first.
double score(const GroundSample& ground, const ReferenceEntry& entry, Head head,
             double simplex_eps = kDefaultSimplexEps);

/// score() against every entry, in database order.
std::vector<double> score_all(const GroundSample& ground, const ReferenceDB& db, Head head,
                              double simplex_eps = kDefaultSimplexEps);

struct ScoredId {
  std::int64_t id = 0;
  double score = 0.0;
  friend bool operator==(const ScoredId&, const ScoredId&) = default;
};

/// The k best entries by descending score; ties go to the lower id.
std::vector<ScoredId> retrieve_topk(const GroundSample& ground, const ReferenceDB& db, Head head,
                                    std::size_t k);

/// Rank fraction from precomputed scores: entries ranked above the true
/// one divided by (n - 1). Pessimistic counts every tie as ranked above;
/// randomized places the true entry uniformly among its ties.
double rank_fraction_pessimistic(std::span<const double> scores, std::size_t true_index);
double rank_fraction_randomized(std::span<const double> scores, std::size_t true_index, Rng& rng);

/// Pessimistic rank fraction of `true_id`.
double localize(const GroundSample& ground, std::int64_t true_id, const ReferenceDB& db, Head head);

struct CurvePoint {
  double threshold = 0.0;
  double accuracy = 0.0;
  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

struct LocalizationCurve {
  std::vector<CurvePoint> points;
  /// Accuracy at an exact threshold of the curve; throws when absent.
  double accuracy_at(double threshold) const;
};

/// Fraction of ranks <= t for each threshold t (ascending, within [0, 1]).
LocalizationCurve accuracy_curve(std::span<const double> ranks, std::span<const double> thresholds);

/// 0.01, 0.02, 0.05, then 0.1 .. 1.0 in steps of 0.1.
std::vector<double> default_thresholds();

struct HeatmapGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  BoundingBox box;
};

/// Row-major, row 0 is the northern edge. Cells without entries hold `fill`.
struct Heatmap {
  HeatmapGrid grid;
  std::vector<double> cells;
  double fill = 0.0;
  double at(std::size_t row, std::size_t col) const { return cells[row * grid.cols + col]; }
};

/// Cell containing `p`, or false when `p` lies outside the box.
bool cell_of(const HeatmapGrid& grid, const GeoPoint& p, std::size_t& row, std::size_t& col);
GeoPoint cell_center(const HeatmapGrid& grid, std::size_t row, std::size_t col);

/// Per-cell maximum score over entries inside the box. Empty cells hold the
/// minimum in-box score minus one, so every occupied cell sits above the fill.
Heatmap heatmap(const GroundSample& ground, const ReferenceDB& db, Head head, const HeatmapGrid& grid);

struct LabelRef {
  Head head = Head::scene;
  std::size_t index = 0;
};

/// Dirichlet heads: mean mass of the label. Counts head: the Poisson rate.
double label_score(const ReferenceEntry& entry, const LabelRef& label);

struct AttributeHit {
  std::int64_t id = 0;
  GeoPoint location;
  double primary = 0.0;
  double secondary = 0.0;
};

struct AttributeSearchResult {
  std::vector<AttributeHit> selection;  // top_n by primary score, descending
  std::vector<AttributeHit> ordered;    // the selection sorted by ascending secondary score
};

AttributeSearchResult attribute_search(const ReferenceDB& db, const LabelRef& primary,
                                       const LabelRef& secondary, std::size_t top_n);

}  // namespace crossview
