#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cdrive/world/world.hpp"

namespace cdrive::world {

/// A stop line crossing the route ahead of the ego front bumper.
struct StopControl {
  std::string id;
  bool is_light = false;
  LightState state = LightState::red;  // lights only
  double distance = 0.0;               // along the route from the front bumper, m
  double arclength = 0.0;              // route arclength of the stop line
};

/// Route arclength of the ego rear axle and of its front bumper.
double ego_arclength(const SceneContext& scene, const VehicleLimits& limits = {});
double ego_front_arclength(const SceneContext& scene, const VehicleLimits& limits = {});

/// Stop lines ahead within `max_distance`, nearest first. A line counts when
/// its midpoint projects onto the route within one lane width.
std::vector<StopControl> stop_controls_ahead(const SceneContext& scene, double max_distance,
                                             const VehicleLimits& limits = {});

bool ego_in_intersection(const SceneContext& scene, const VehicleLimits& limits = {});
/// The ego reference point lies inside a pickup/drop-off polygon.
bool ego_in_pudo(const SceneContext& scene);

/// Position of an agent relative to the route near the ego.
struct LaneRelation {
  double gap = 0.0;      // bumper-to-bumper distance along the route (negative: behind)
  double lateral = 0.0;  // agent center offset from the centerline
  bool in_lane = false;  // |lateral| within half a lane plus half the agent width
};

LaneRelation lane_relation(const SceneContext& scene, const Agent& agent, const VehicleLimits& limits = {});

/// Nearest in-lane agent ahead within `max_gap`, optionally restricted to a
/// category.
std::optional<std::pair<const Agent*, LaneRelation>> lead_agent(const SceneContext& scene, double max_gap,
                                                                 std::optional<AgentCategory> category = {},
                                                                 const VehicleLimits& limits = {});

}  // namespace cdrive::world
