#include "cdrive/data/labeler.hpp"

#include <cmath>
#include <stdexcept>

#include "cdrive/world/map_query.hpp"

namespace cdrive::data {

using world::AgentCategory;

SceneFacts scene_facts(const world::SceneContext& truth, const LabelerConfig& cfg) {
  const world::VehicleLimits limits;
  SceneFacts f;
  f.intersection = world::ego_in_intersection(truth, limits);
  f.pudo = world::ego_in_pudo(truth);
  for (const auto& sc : world::stop_controls_ahead(truth, std::max(cfg.stop_sign_range, cfg.light_range), limits)) {
    if (sc.is_light && sc.distance <= cfg.light_range) f.traffic_light = true;
    if (!sc.is_light && sc.distance <= cfg.stop_sign_range) f.stop_sign = true;
  }
  const world::OrientedBox ego_box = world::ego_footprint(truth.ego, limits);
  for (const auto& a : truth.agents) {
    const double d = world::box_distance(ego_box, a.footprint());
    switch (a.category) {
      case AgentCategory::vehicle:
        if (d <= cfg.close_distance) f.close = true;
        break;
      case AgentCategory::pedestrian:
        if (d <= cfg.pedestrian_range) f.pedestrian = true;
        break;
      case AgentCategory::cyclist:
        if (d <= cfg.cyclist_range) f.bike = true;
        break;
      case AgentCategory::cone:
        break;
    }
  }
  if (truth.route) {
    for (const auto& a : truth.agents) {
      if (a.category != AgentCategory::vehicle) continue;
      const world::LaneRelation r = world::lane_relation(truth, a, limits);
      if (!r.in_lane || r.gap < 0.0) continue;
      const double center_s = truth.route->centerline.project(a.pose.position()).arclength;
      if (center_s < world::ego_front_arclength(truth, limits) - 0.5 * limits.ego_length) continue;
      if (a.speed < cfg.asv_speed && r.gap <= cfg.asv_range) f.asv = true;
      if (a.speed >= cfg.asv_speed && r.gap <= cfg.following_range) f.following = true;
    }
  }
  return f;
}

double mean_curvature(const trajgen::Trajectory& t, double min_path) {
  double turn = 0.0, path = 0.0;
  for (std::size_t i = 1; i < t.waypoints.size(); ++i) {
    const auto& a = t.waypoints[i - 1];
    const auto& b = t.waypoints[i];
    turn += world::wrap_angle(b.heading - a.heading);
    path += std::hypot(b.x - a.x, b.y - a.y);
  }
  return path < min_path ? 0.0 : turn / path;
}

double mean_speed(const trajgen::Trajectory& t) {
  if (t.waypoints.empty()) return 0.0;
  double s = 0.0;
  for (const auto& w : t.waypoints) s += w.speed;
  return s / static_cast<double>(t.waypoints.size());
}

cwnet::ConceptLabels label_concepts(const world::SceneContext& truth, const std::vector<trajgen::Trajectory>& candidates,
                                    const cwnet::ConceptSchema& schema, const LabelerConfig& cfg) {
  const SceneFacts f = scene_facts(truth, cfg);
  cwnet::ConceptLabels out;
  out.candidates = static_cast<int>(candidates.size());
  out.groups = static_cast<int>(schema.groups.size());
  out.binaries = static_cast<int>(schema.binaries.size());
  for (const auto& c : candidates) {
    const double k = mean_curvature(c, cfg.min_turn_path);
    const double v = mean_speed(c);
    const bool stopped = v < cfg.stopped_speed;
    for (const auto& g : schema.groups) {
      int member = -1;
      if (g.name == "steering") {
        const std::string want = std::abs(k) < cfg.straight_curvature ? "STRAIGHT" : (k > 0 ? "LEFT" : "RIGHT");
        for (std::size_t m = 0; m < g.members.size(); ++m)
          if (g.members[m] == want) member = static_cast<int>(m);
      } else if (g.name == "speed") {
        const std::string want = stopped ? "STOPPED" : "SLOW";
        for (std::size_t m = 0; m < g.members.size(); ++m)
          if (g.members[m] == want) member = static_cast<int>(m);
      }
      if (member < 0) throw std::invalid_argument("labeler has no rule for group '" + g.name + "'");
      out.group.push_back(member);
    }
    for (const auto& b : schema.binaries) {
      bool on;
      if (b == "SLOW") on = v >= cfg.slow_min && v <= cfg.slow_max;
      else if (b == "STOPPED") on = stopped;
      else if (b == "FAST") on = v > cfg.slow_max;
      else if (b == "ASV") on = f.asv;
      else if (b == "INTERSECTION") on = f.intersection;
      else if (b == "CLOSE") on = f.close;
      else if (b == "STOP_SIGN") on = f.stop_sign;
      else if (b == "TRAFFIC_LIGHT") on = f.traffic_light;
      else if (b == "PEDESTRIAN") on = f.pedestrian;
      else if (b == "FOLLOWING") on = f.following;
      else if (b == "BIKE") on = f.bike;
      else if (b == "PUDO") on = f.pudo;
      else throw std::invalid_argument("labeler has no rule for concept '" + b + "'");
      out.binary.push_back(on ? 1 : 0);
    }
  }
  return out;
}

}  // namespace cdrive::data
