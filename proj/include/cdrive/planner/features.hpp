#pragma once

#include <stdexcept>
#include <vector>

#include "cdrive/ad/params.hpp"
#include "cdrive/trajgen/trajgen.hpp"
#include "cdrive/world/world.hpp"

namespace cdrive::planner {

// Per-object: rel. position (2), rel. velocity (2), rel. heading, category
// one-hot (4), speed, footprint distance. Ego: speed, acceleration, steering,
// distance to goal, in intersection, stop sign ahead, light ahead (+1 red,
// -1 green), in pickup zone, distance to the next stop line.
inline constexpr int kObjectFeatures = 11;
inline constexpr int kEgoFeatures = 9;
inline constexpr int kWaypointFeatures = 4;
inline constexpr int kWaypointStride = 2;  // every other waypoint feeds the recurrent encoder
inline constexpr double kObjectRange = 40.0;

class SchemaMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SceneFeatures {
  ad::Matrix objects;  // n x kObjectFeatures, rows in canonical (lexicographic) order
  ad::Matrix ego;      // 1 x kEgoFeatures
};

/// Throws SchemaMismatch when the scene carries a category the schema excludes.
SceneFeatures scene_features(const world::SceneContext& scene, const world::FeatureSchema& schema);

/// Recurrent-encoder input: one (k x kWaypointFeatures) matrix per sampled
/// waypoint, expressed in the ego frame.
std::vector<ad::Matrix> trajectory_sequence(const std::vector<trajgen::Trajectory>& candidates,
                                            const world::EgoState& ego);

}  // namespace cdrive::planner
