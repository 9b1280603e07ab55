#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdrive/world/world.hpp"

namespace cdrive::data {

/// Piece of road: straight when curvature is 0, otherwise a circular arc
/// (positive curvature turns left).
struct RoadSegment {
  double length = 0.0;
  double curvature = 0.0;
};

/// Polyline starting at the origin heading +x, sampled every `spacing` m.
std::vector<world::Vec2> road_polyline(const std::vector<RoadSegment>& segments, double spacing = 1.0);

/// Mix of road shapes and scene features a procedural suite draws from.
struct SuiteSpec {
  std::string name;
  std::vector<std::string> shapes;  // straight | left | right | s_curve
  double p_stop_control = 0.45;
  double p_lead = 0.35;
  double p_stopped_vehicle = 0.25;  // exclusive with a lead
  double p_parked_row = 0.3;
  double p_pedestrians = 0.3;
  double p_cyclists = 0.3;
  double p_pudo = 0.25;
  double p_cones = 0.2;
  double duration = 30.0;
};

/// full, nominal (no cyclists or cones), turns, straights, cyclists.
SuiteSpec suite_spec(const std::string& name);
std::vector<std::string> suite_names();

/// splitmix64 of (seed, index); stable across platforms.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

/// Deterministic scenario drawn from the suite.
world::Scenario procedural_scenario(const SuiteSpec& spec, std::uint64_t seed);

}  // namespace cdrive::data
