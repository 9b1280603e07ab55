#include "cdrive/world/map_query.hpp"

#include <algorithm>
#include <cmath>

namespace cdrive::world {

double ego_arclength(const SceneContext& scene, const VehicleLimits&) {
  if (!scene.route) return 0.0;
  return scene.route->centerline.project(scene.ego.position).arclength;
}

double ego_front_arclength(const SceneContext& scene, const VehicleLimits& limits) {
  return ego_arclength(scene, limits) + 0.5 * scene.ego.wheelbase + 0.5 * limits.ego_length;
}

std::vector<StopControl> stop_controls_ahead(const SceneContext& scene, double max_distance,
                                             const VehicleLimits& limits) {
  std::vector<StopControl> out;
  if (!scene.route || !scene.map) return out;
  const Route& route = *scene.route;
  const double front = ego_front_arclength(scene, limits);
  auto consider = [&](const std::string& id, Vec2 a, Vec2 b, bool light, LightState st) {
    const Vec2 mid = (a + b) * 0.5;
    const Projection p = route.centerline.project(mid);
    if (std::abs(p.lateral) > route.lane_width) return;
    if (p.arclength <= 0.0 || p.arclength >= route.length()) return;
    const double d = p.arclength - front;
    if (d < 0.0 || d > max_distance) return;
    out.push_back({id, light, st, d, p.arclength});
  };
  for (const auto& e : *scene.map) {
    if (const auto* s = std::get_if<StopSign>(&e))
      consider(s->id, s->stop_line_a, s->stop_line_b, false, LightState::red);
    else if (const auto* l = std::get_if<TrafficLight>(&e))
      consider(l->id, l->stop_line_a, l->stop_line_b, true, l->state);
  }
  std::sort(out.begin(), out.end(),
            [](const StopControl& x, const StopControl& y) { return std::tie(x.distance, x.id) < std::tie(y.distance, y.id); });
  return out;
}

bool ego_in_intersection(const SceneContext& scene, const VehicleLimits& limits) {
  if (!scene.map) return false;
  const OrientedBox fp = ego_footprint(scene.ego, limits);
  for (const auto& e : *scene.map)
    if (const auto* ia = std::get_if<IntersectionArea>(&e))
      if (polygon_intersects_box(ia->polygon, fp)) return true;
  return false;
}

bool ego_in_pudo(const SceneContext& scene) {
  if (!scene.map) return false;
  for (const auto& e : *scene.map)
    if (const auto* z = std::get_if<PudoZone>(&e))
      if (point_in_polygon(scene.ego.position, z->polygon)) return true;
  return false;
}

LaneRelation lane_relation(const SceneContext& scene, const Agent& agent, const VehicleLimits& limits) {
  LaneRelation r;
  if (!scene.route) return r;
  const Route& route = *scene.route;
  const Projection p = route.centerline.project(agent.pose.position());
  const double front = ego_front_arclength(scene, limits);
  const double rear = front - limits.ego_length;
  const double half = 0.5 * agent.length;
  if (p.arclength - half >= front)
    r.gap = p.arclength - half - front;
  else if (p.arclength + half <= rear)
    r.gap = p.arclength + half - rear;
  else
    r.gap = 0.0;
  r.lateral = p.lateral;
  r.in_lane = std::abs(p.lateral) <= 0.5 * route.lane_width + 0.5 * agent.width &&
              p.arclength > -half && p.arclength < route.length() + half;
  return r;
}

std::optional<std::pair<const Agent*, LaneRelation>> lead_agent(const SceneContext& scene, double max_gap,
                                                                 std::optional<AgentCategory> category,
                                                                 const VehicleLimits& limits) {
  std::optional<std::pair<const Agent*, LaneRelation>> best;
  const double front = ego_front_arclength(scene, limits);
  for (const auto& a : scene.agents) {
    if (category && a.category != *category) continue;
    const LaneRelation r = lane_relation(scene, a, limits);
    if (!r.in_lane) continue;
    // overlapping alongside counts as gap 0 only when the agent is not behind the rear axle
    const double center_s = scene.route->centerline.project(a.pose.position()).arclength;
    if (center_s < front - limits.ego_length * 0.5) continue;
    if (r.gap < 0.0 || r.gap > max_gap) continue;
    if (!best || r.gap < best->second.gap) best = std::make_pair(&a, r);
  }
  return best;
}

}  // namespace cdrive::world
