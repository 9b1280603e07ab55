#include "cdrive/planner/features.hpp"

#include <algorithm>
#include <cmath>

#include "cdrive/world/map_query.hpp"

namespace cdrive::planner {

SceneFeatures scene_features(const world::SceneContext& scene, const world::FeatureSchema& schema) {
  const world::VehicleLimits limits;
  const auto& ego = scene.ego;
  const world::OrientedBox ego_box = world::ego_footprint(ego, limits);
  const double c = std::cos(ego.heading), s = std::sin(ego.heading);
  const world::Vec2 ego_vel = world::unit_from_heading(ego.heading) * ego.speed;

  std::vector<std::array<double, kObjectFeatures>> rows;
  for (const auto& a : scene.agents) {
    if (!schema.includes(a.category))
      throw SchemaMismatch(std::string("scene carries a '") + world::to_string(a.category) +
                           "' agent the feature schema excludes");
    const world::Vec2 d = a.pose.position() - ego_box.center;
    if (d.norm() > kObjectRange) continue;
    const world::Vec2 dv = world::unit_from_heading(a.pose.heading) * a.speed - ego_vel;
    std::array<double, kObjectFeatures> f{};
    f[0] = (c * d.x + s * d.y) / 20.0;
    f[1] = (-s * d.x + c * d.y) / 20.0;
    f[2] = (c * dv.x + s * dv.y) / 5.0;
    f[3] = (-s * dv.x + c * dv.y) / 5.0;
    f[4] = world::wrap_angle(a.pose.heading - ego.heading) / M_PI;
    f[5 + static_cast<int>(a.category)] = 1.0;
    f[9] = a.speed / 5.0;
    f[10] = world::box_distance(ego_box, a.footprint()) / 20.0;
    rows.push_back(f);
  }
  std::sort(rows.begin(), rows.end());

  SceneFeatures out;
  out.objects.resize(static_cast<Eigen::Index>(rows.size()), kObjectFeatures);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < kObjectFeatures; ++j) out.objects(i, j) = rows[i][j];

  out.ego = ad::Matrix::Zero(1, kEgoFeatures);
  out.ego(0, 0) = ego.speed / 5.0;
  out.ego(0, 1) = ego.acceleration / 3.0;
  out.ego(0, 2) = ego.steering_angle / limits.max_steer;
  if (scene.route) {
    const double to_goal = scene.route->goal_arclength - world::ego_arclength(scene, limits);
    out.ego(0, 3) = std::clamp(to_goal, 0.0, 50.0) / 50.0;
  }
  out.ego(0, 4) = world::ego_in_intersection(scene, limits) ? 1.0 : 0.0;
  double next_stop = 30.0;
  bool light_seen = false;
  for (const auto& sc : world::stop_controls_ahead(scene, 30.0, limits)) {
    if (!sc.is_light && sc.distance <= 15.0) out.ego(0, 5) = 1.0;
    if (sc.is_light && !light_seen) {
      out.ego(0, 6) = sc.state == world::LightState::red ? 1.0 : -1.0;
      light_seen = true;
    }
    if (!sc.is_light || sc.state == world::LightState::red) next_stop = std::min(next_stop, sc.distance);
  }
  out.ego(0, 7) = world::ego_in_pudo(scene) ? 1.0 : 0.0;
  out.ego(0, 8) = next_stop / 30.0;
  return out;
}

std::vector<ad::Matrix> trajectory_sequence(const std::vector<trajgen::Trajectory>& candidates,
                                            const world::EgoState& ego) {
  if (candidates.empty()) return {};
  const std::size_t n = candidates.front().waypoints.size();
  const double c = std::cos(ego.heading), s = std::sin(ego.heading);
  std::vector<ad::Matrix> seq;
  for (std::size_t w = 0; w < n; w += kWaypointStride) {
    ad::Matrix step(static_cast<Eigen::Index>(candidates.size()), kWaypointFeatures);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (candidates[i].waypoints.size() != n) throw std::invalid_argument("candidates differ in length");
      const auto& p = candidates[i].waypoints[w];
      const double dx = p.x - ego.position.x, dy = p.y - ego.position.y;
      step(i, 0) = (c * dx + s * dy) / 20.0;
      step(i, 1) = (-s * dx + c * dy) / 5.0;
      step(i, 2) = world::wrap_angle(p.heading - ego.heading);
      step(i, 3) = p.speed / 5.0;
    }
    seq.push_back(std::move(step));
  }
  return seq;
}

}  // namespace cdrive::planner
