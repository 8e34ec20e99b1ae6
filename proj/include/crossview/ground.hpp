#pragma once

#include <vector>

#include "crossview/distributions.hpp"

namespace crossview {

/// Overhead representation fed to the model.
using FeatureVector = std::vector<double>;

/// Ground-level supervision for one location: scene and image-class
/// distributions plus per-class object counts.
struct GroundSample {
  SimplexVector scene_dist;
  SimplexVector image_dist;
  CountVector counts;
  friend bool operator==(const GroundSample&, const GroundSample&) = default;
};

}  // namespace crossview
