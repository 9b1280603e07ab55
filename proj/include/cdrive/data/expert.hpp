#pragma once

#include <set>
#include <string>

#include "cdrive/world/world.hpp"

namespace cdrive::data {

struct ExpertConfig {
  double desired_speed = 5.0;   // v0, m/s
  double max_accel = 1.5;       // a_max, m/s^2
  double comfortable_decel = 2.0;  // b, m/s^2
  double min_gap = 2.0;         // s0, m
  double headway = 1.2;         // T_h, s
  double lookahead = 6.0;       // minimum pure-pursuit lookahead, m
  double lookahead_time = 1.0;  // lookahead grows by speed * this, s
  double force_stop_radius = 3.0;  // agents this close in the ego corridor force a stop, m
  double stop_wait = 1.0;       // dwell at a stop sign, s
  double lead_range = 50.0;     // in-lane agents considered as leads, m

  /// Throws std::invalid_argument unless every field is positive.
  void validate() const;
};

/// Intelligent-driver acceleration for gap `s` to a lead moving at `v_lead`.
double idm_accel(const ExpertConfig& cfg, double v, double s, double v_lead);

/// Stateless expert rule: car following (red lights, uncleared stop signs
/// and the route goal act as stationary leads; nearby agents ahead force a
/// stop) plus pure pursuit on the route centerline.
world::Control expert_policy(const world::SceneContext& scene, const ExpertConfig& cfg,
                             const std::set<std::string>& cleared_stop_signs = {},
                             const world::VehicleLimits& limits = {});

/// Expert with the small amount of memory stop signs need.
class ExpertDriver {
 public:
  explicit ExpertDriver(ExpertConfig cfg = {}, world::VehicleLimits limits = {});
  world::Control act(const world::SceneContext& scene, double dt);

 private:
  ExpertConfig cfg_;
  world::VehicleLimits limits_;
  std::set<std::string> cleared_;
  std::string waiting_at_;
  double waited_ = 0.0;
};

}  // namespace cdrive::data
