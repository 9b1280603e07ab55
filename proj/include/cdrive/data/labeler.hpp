#pragma once

#include <vector>

#include "cdrive/cwnet/concepts.hpp"
#include "cdrive/trajgen/trajectory.hpp"
#include "cdrive/world/world.hpp"

namespace cdrive::data {

// Thresholds are inclusive on the positive side.
struct LabelerConfig {
  double straight_curvature = 0.01;  // 1/m; below -> STRAIGHT
  double min_turn_path = 0.5;        // m; shorter paths count as STRAIGHT
  double stopped_speed = 0.1;        // m/s, mean candidate speed
  double slow_min = 1.0;
  double slow_max = 2.0;
  double asv_range = 25.0;
  double asv_speed = 0.5;
  double close_distance = 3.0;
  double stop_sign_range = 15.0;
  double light_range = 15.0;
  double pedestrian_range = 10.0;
  double cyclist_range = 10.0;
  double following_range = 20.0;
};

/// Scene-level concept facts, shared by every candidate of a record.
struct SceneFacts {
  bool asv = false;
  bool intersection = false;
  bool close = false;
  bool stop_sign = false;
  bool traffic_light = false;
  bool pedestrian = false;
  bool following = false;
  bool bike = false;
  bool pudo = false;
};

SceneFacts scene_facts(const world::SceneContext& truth, const LabelerConfig& cfg = {});

/// Heading change over path length; 0 for paths shorter than `min_turn_path`.
double mean_curvature(const trajgen::Trajectory& t, double min_path = 0.5);
double mean_speed(const trajgen::Trajectory& t);

/// Labels for every candidate. Steering and speed concepts come from each
/// candidate's own geometry; the rest are copied from the scene.
cwnet::ConceptLabels label_concepts(const world::SceneContext& truth, const std::vector<trajgen::Trajectory>& candidates,
                                    const cwnet::ConceptSchema& schema, const LabelerConfig& cfg = {});

}  // namespace cdrive::data
