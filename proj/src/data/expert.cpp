#include "cdrive/data/expert.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cdrive/world/map_query.hpp"

namespace cdrive::data {

void ExpertConfig::validate() const {
  for (double v : {desired_speed, max_accel, comfortable_decel, min_gap, headway, lookahead, lookahead_time,
                   force_stop_radius, stop_wait, lead_range})
    if (!(v > 0.0)) throw std::invalid_argument("expert config values must be positive");
}

double idm_accel(const ExpertConfig& cfg, double v, double s, double v_lead) {
  const double dv = v - v_lead;
  const double s_star =
      cfg.min_gap + std::max(0.0, v * cfg.headway + v * dv / (2.0 * std::sqrt(cfg.max_accel * cfg.comfortable_decel)));
  const double gap = std::max(s, 1e-3);
  return cfg.max_accel * (1.0 - std::pow(v / cfg.desired_speed, 4) - (s_star / gap) * (s_star / gap));
}

world::Control expert_policy(const world::SceneContext& scene, const ExpertConfig& cfg,
                             const std::set<std::string>& cleared, const world::VehicleLimits& limits) {
  world::Control u;
  if (!scene.route) return u;
  const world::Route& route = *scene.route;
  const world::EgoState& ego = scene.ego;
  const double v = ego.speed;

  // free road
  double accel = cfg.max_accel * (1.0 - std::pow(v / cfg.desired_speed, 4));
  auto follow = [&](double gap, double v_lead) { accel = std::min(accel, idm_accel(cfg, v, gap, v_lead)); };

  // route goal
  const double front = world::ego_front_arclength(scene, limits);
  follow(route.goal_arclength - front + cfg.min_gap, 0.0);

  for (const auto& sc : world::stop_controls_ahead(scene, cfg.lead_range, limits)) {
    if (sc.is_light) {
      if (sc.state != world::LightState::red) continue;
      // past the point of a comfortable stop at the actuation limit: go through
      if (sc.distance < v * v / (2.0 * limits.max_decel)) continue;
    } else if (cleared.count(sc.id)) {
      continue;
    }
    follow(sc.distance + cfg.min_gap, 0.0);
  }

  if (const auto lead = world::lead_agent(scene, cfg.lead_range, {}, limits)) {
    const world::Agent& a = *lead->first;
    const double along = a.speed * std::cos(world::wrap_angle(a.pose.heading - ego.heading));
    follow(lead->second.gap, std::max(0.0, along));
  }

  // anything in the swept corridor within the force-stop radius
  const world::OrientedBox box = world::ego_footprint(ego, limits);
  const double c = std::cos(ego.heading), s = std::sin(ego.heading);
  for (const auto& a : scene.agents) {
    const world::Vec2 d = a.pose.position() - box.center;
    const double ahead = c * d.x + s * d.y;
    const double side = -s * d.x + c * d.y;
    if (ahead <= 0.5 * limits.ego_length) continue;
    if (std::abs(side) > 0.5 * (limits.ego_width + std::max(a.width, a.length)) + 0.5) continue;
    if (world::box_distance(box, a.footprint()) <= cfg.force_stop_radius) {
      accel = std::min(accel, -std::min(limits.max_decel, std::max(cfg.comfortable_decel, v / 0.5)));
    }
  }
  u.acceleration = std::clamp(accel, -limits.max_decel, limits.max_accel);

  // pure pursuit on the centerline
  const double s_rear = route.centerline.project(ego.position).arclength;
  const double ld = std::max(cfg.lookahead, v * cfg.lookahead_time);
  const world::FramePoint target = route.centerline.at_extrapolated(s_rear + ld, 0.0);
  const double dx = target.x - ego.position.x, dy = target.y - ego.position.y;
  const double alpha = std::atan2(-s * dx + c * dy, c * dx + s * dy);
  const double dist = std::hypot(dx, dy);
  const double steer = std::atan2(2.0 * ego.wheelbase * std::sin(alpha), std::max(dist, 1e-3));
  u.steering = std::clamp(steer, -limits.max_steer, limits.max_steer);
  return u;
}

ExpertDriver::ExpertDriver(ExpertConfig cfg, world::VehicleLimits limits) : cfg_(cfg), limits_(limits) {
  cfg_.validate();
}

world::Control ExpertDriver::act(const world::SceneContext& scene, double dt) {
  // a stop sign is cleared after dwelling at its line
  const auto controls = world::stop_controls_ahead(scene, cfg_.min_gap + 1.5, limits_);
  bool at_line = false;
  for (const auto& sc : controls) {
    if (sc.is_light || cleared_.count(sc.id)) continue;
    if (scene.ego.speed < 0.2) {
      at_line = true;
      if (waiting_at_ != sc.id) {
        waiting_at_ = sc.id;
        waited_ = 0.0;
      }
      waited_ += dt;
      if (waited_ >= cfg_.stop_wait) cleared_.insert(sc.id);
    }
    break;
  }
  if (!at_line) waited_ = 0.0;
  return expert_policy(scene, cfg_, cleared_, limits_);
}

}  // namespace cdrive::data
