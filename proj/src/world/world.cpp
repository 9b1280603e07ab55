#include "cdrive/world/world.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace cdrive::world {

OrientedBox ego_footprint(const EgoState& ego, const VehicleLimits& limits) {
  const Vec2 c = ego.position + unit_from_heading(ego.heading) * (0.5 * ego.wheelbase);
  return {c, ego.heading, limits.ego_length, limits.ego_width};
}

OrientedBox ego_front_half(const EgoState& ego, const VehicleLimits& limits) {
  const OrientedBox full = ego_footprint(ego, limits);
  return {full.center + unit_from_heading(ego.heading) * (0.25 * limits.ego_length), ego.heading,
          0.5 * limits.ego_length, limits.ego_width};
}

// --- kinematics -------------------------------------------------------------

namespace {

struct KinState {
  double x, y, heading, speed;
};

KinState derivative(const KinState& s, double accel, double yaw_per_meter) {
  return {s.speed * std::cos(s.heading), s.speed * std::sin(s.heading), s.speed * yaw_per_meter,
          accel};
}

KinState axpy(const KinState& s, const KinState& d, double h) {
  return {s.x + h * d.x, s.y + h * d.y, s.heading + h * d.heading, s.speed + h * d.speed};
}

constexpr int kSubsteps = 20;

}  // namespace

EgoState step_ego(const EgoState& state, const Control& control, double dt,
                  const VehicleLimits& limits) {
  for (double v : {state.position.x, state.position.y, state.heading, state.speed,
                   control.acceleration, control.steering, dt}) {
    if (!std::isfinite(v)) throw std::invalid_argument("step_ego: non-finite input");
  }
  if (dt <= 0.0) throw std::invalid_argument("step_ego: dt must be positive");
  if (std::abs(control.steering) > limits.max_steer + 1e-12)
    throw std::invalid_argument("step_ego: steering beyond limit");
  if (control.acceleration > limits.max_accel + 1e-12 ||
      control.acceleration < -limits.max_decel - 1e-12)
    throw std::invalid_argument("step_ego: acceleration beyond limit");
  if (state.wheelbase <= 0.0) throw std::invalid_argument("step_ego: wheelbase must be positive");

  const double accel = control.acceleration;
  const double yaw_per_meter = std::tan(control.steering) / state.wheelbase;
  double moving = dt;
  if (accel < 0.0 && state.speed + accel * dt < 0.0) moving = state.speed / -accel;

  KinState s{state.position.x, state.position.y, state.heading, std::max(0.0, state.speed)};
  if (moving > 0.0) {
    const double h = moving / kSubsteps;
    for (int i = 0; i < kSubsteps; ++i) {
      const KinState k1 = derivative(s, accel, yaw_per_meter);
      const KinState k2 = derivative(axpy(s, k1, 0.5 * h), accel, yaw_per_meter);
      const KinState k3 = derivative(axpy(s, k2, 0.5 * h), accel, yaw_per_meter);
      const KinState k4 = derivative(axpy(s, k3, h), accel, yaw_per_meter);
      s.x += h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
      s.y += h / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y);
      s.heading += h / 6.0 * (k1.heading + 2.0 * k2.heading + 2.0 * k3.heading + k4.heading);
      s.speed += h / 6.0 * (k1.speed + 2.0 * k2.speed + 2.0 * k3.speed + k4.speed);
    }
  }
  EgoState out = state;
  out.position = {s.x, s.y};
  out.heading = s.heading;
  out.speed = moving < dt ? 0.0 : std::max(0.0, s.speed);
  out.acceleration = moving < dt ? 0.0 : accel;
  out.steering_angle = control.steering;
  return out;
}

// --- categories and map -----------------------------------------------------

const char* to_string(AgentCategory c) {
  switch (c) {
    case AgentCategory::vehicle: return "vehicle";
    case AgentCategory::cyclist: return "cyclist";
    case AgentCategory::pedestrian: return "pedestrian";
    case AgentCategory::cone: return "cone";
  }
  return "?";
}

AgentCategory category_from_string(const std::string& s) {
  if (s == "vehicle") return AgentCategory::vehicle;
  if (s == "cyclist") return AgentCategory::cyclist;
  if (s == "pedestrian") return AgentCategory::pedestrian;
  if (s == "cone") return AgentCategory::cone;
  throw std::invalid_argument("unknown agent category '" + s + "'");
}

const std::string& element_id(const MapElement& e) {
  return std::visit([](const auto& v) -> const std::string& { return v.id; }, e);
}

void validate(const MapElement& e) {
  std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Lane>) {
          if (v.centerline.size() < 2) throw std::invalid_argument("lane " + v.id + ": < 2 points");
          if (v.width <= 0.0) throw std::invalid_argument("lane " + v.id + ": width must be > 0");
        } else if constexpr (std::is_same_v<T, IntersectionArea> || std::is_same_v<T, PudoZone>) {
          if (!polygon_is_simple(v.polygon))
            throw std::invalid_argument("polygon " + v.id + " is not simple");
        }
      },
      e);
}

Route build_route(const std::vector<MapElement>& map, const std::vector<std::string>& lane_ids,
                  double goal_arclength) {
  if (lane_ids.empty()) throw std::invalid_argument("route has no lanes");
  std::vector<Vec2> pts;
  double width = 0.0;
  for (const auto& id : lane_ids) {
    const Lane* lane = nullptr;
    for (const auto& e : map) {
      if (const auto* l = std::get_if<Lane>(&e); l && l->id == id) lane = l;
    }
    if (!lane) throw std::invalid_argument("route references unknown lane '" + id + "'");
    if (!pts.empty()) {
      if ((lane->centerline.front() - pts.back()).norm() > 0.01)
        throw std::invalid_argument("route lanes are not connected at '" + id + "'");
      pts.insert(pts.end(), lane->centerline.begin() + 1, lane->centerline.end());
    } else {
      pts = lane->centerline;
    }
    width = std::max(width, lane->width);
  }
  Route r;
  r.lane_ids = lane_ids;
  r.centerline = Centerline(std::move(pts));
  r.goal_arclength = goal_arclength < 0.0 ? r.centerline.length()
                                          : std::min(goal_arclength, r.centerline.length());
  r.lane_width = width;
  return r;
}

// --- agent scripts ----------------------------------------------------------

namespace {

double polyline_length(const std::vector<Vec2>& path) {
  double len = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) len += (path[i + 1] - path[i]).norm();
  return len;
}

Pose polyline_pose(const std::vector<Vec2>& path, double s) {
  if (path.size() == 1) return {path[0].x, path[0].y, 0.0};
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Vec2 d = path[i + 1] - path[i];
    const double len = d.norm();
    if (acc + len >= s || i + 2 == path.size()) {
      const double u = len > 0.0 ? std::clamp((s - acc) / len, 0.0, 1.0) : 0.0;
      const Vec2 p = path[i] + d * u;
      return {p.x, p.y, std::atan2(d.y, d.x)};
    }
    acc += len;
  }
  return {path.back().x, path.back().y, 0.0};
}

void place_on_path(Agent& a) {
  if (a.script.kind != ScriptKind::stationary && a.script.path.size() >= 2) {
    a.pose = polyline_pose(a.script.path, a.path_progress);
  }
}

}  // namespace

World::World(const Scenario& scenario, VehicleLimits limits)
    : ego_(scenario.ego), agents_(scenario.agents), limits_(limits) {
  for (const auto& e : scenario.map) validate(e);
  map_ = std::make_shared<const std::vector<MapElement>>(scenario.map);
  route_ = std::make_shared<const Route>(
      build_route(scenario.map, scenario.route_lanes, scenario.goal_arclength));
  for (auto& a : agents_) {
    if (a.length <= 0.0 || a.width <= 0.0)
      throw std::invalid_argument("agent " + a.id + ": footprint must be positive");
    if (a.script.kind == ScriptKind::stationary) a.speed = 0.0;
    place_on_path(a);
  }
  update_lights();
  map_version_ = 0;
}

const Agent* World::find_agent(const std::string& id) const {
  for (const auto& a : agents_)
    if (a.id == id) return &a;
  return nullptr;
}

bool World::remove_agent(const std::string& id) {
  const auto it = std::find_if(agents_.begin(), agents_.end(), [&](const Agent& a) { return a.id == id; });
  if (it == agents_.end()) return false;
  agents_.erase(it);
  return true;
}

void World::spawn_agent(Agent agent) {
  if (find_agent(agent.id)) throw std::invalid_argument("agent id '" + agent.id + "' already exists");
  if (agent.length <= 0.0 || agent.width <= 0.0)
    throw std::invalid_argument("agent footprint must be positive");
  if (agent.script.kind == ScriptKind::stationary) agent.speed = 0.0;
  place_on_path(agent);
  agents_.push_back(std::move(agent));
}

bool World::set_light(const std::string& id, LightState state) {
  auto map = *map_;
  bool found = false;
  for (auto& e : map) {
    if (auto* l = std::get_if<TrafficLight>(&e); l && l->id == id) {
      l->state = state;
      l->cycle.reset();
      found = true;
    }
  }
  if (!found) return false;
  map_ = std::make_shared<const std::vector<MapElement>>(std::move(map));
  ++map_version_;
  return true;
}

void World::update_lights() {
  std::vector<MapElement> map;
  bool changed = false;
  for (std::size_t i = 0; i < map_->size(); ++i) {
    const auto* l = std::get_if<TrafficLight>(&(*map_)[i]);
    if (!l || !l->cycle) continue;
    const double period = l->cycle->red + l->cycle->green;
    const double phase = std::fmod(time_ + l->cycle->offset, period);
    const LightState want = phase < l->cycle->red ? LightState::red : LightState::green;
    if (want != l->state) {
      if (!changed) map = *map_;
      std::get<TrafficLight>(map[i]).state = want;
      changed = true;
    }
  }
  if (changed) {
    map_ = std::make_shared<const std::vector<MapElement>>(std::move(map));
    ++map_version_;
  }
}

void World::advance_agents(double dt) {
  const std::vector<Agent> before = agents_;
  for (auto& a : agents_) {
    const AgentScript& sc = a.script;
    if (sc.kind == ScriptKind::stationary || sc.path.size() < 2) {
      a.speed = 0.0;
      continue;
    }
    double v = time_ < sc.start_delay ? 0.0 : sc.cruise_speed;
    if (sc.kind == ScriptKind::follow_lead) {
      for (const auto& lead : before) {
        if (lead.id != sc.lead_id) continue;
        const double gap = (lead.pose.position() - a.pose.position()).norm();
        v = std::min(v, std::max(0.0, gap - sc.min_gap));
      }
    }
    const double len = polyline_length(sc.path);
    a.path_progress = std::min(len, a.path_progress + v * dt);
    a.speed = a.path_progress >= len ? 0.0 : v;
    a.pose = polyline_pose(sc.path, a.path_progress);
  }
}

void World::step(const Control& control, double dt) {
  ego_ = step_ego(ego_, control, dt, limits_);
  advance_agents(dt);
  time_ += dt;
  update_lights();
}

SceneContext build_scene(const World& world, const FeatureSchema& schema) {
  SceneContext s;
  s.timestamp = world.time();
  s.ego = world.ego();
  s.map = world.map();
  s.route = world.route();
  s.map_version = world.map_version();
  const Vec2 ego_center = ego_footprint(world.ego(), world.limits()).center;
  std::vector<std::pair<double, const Agent*>> keyed;
  for (const auto& a : world.agents()) {
    if (!schema.includes(a.category)) continue;
    keyed.emplace_back((a.pose.position() - ego_center).norm(), &a);
  }
  std::sort(keyed.begin(), keyed.end(), [](const auto& l, const auto& r) {
    return std::tie(l.first, l.second->id) < std::tie(r.first, r.second->id);
  });
  s.agents.reserve(keyed.size());
  for (const auto& [d, a] : keyed) s.agents.push_back(*a);
  return s;
}

// --- backstop ---------------------------------------------------------------

namespace {

// Pose `distance` meters along the planned path, continuing straight past its end.
Pose pose_along(const std::vector<Pose>& path, const std::vector<double>& cum, double distance) {
  if (path.size() == 1 || distance <= 0.0) {
    const Pose& p = path.front();
    if (distance <= 0.0) return p;
    const Vec2 q = p.position() + unit_from_heading(p.heading) * distance;
    return {q.x, q.y, p.heading};
  }
  if (distance >= cum.back()) {
    const Pose& p = path.back();
    const Vec2 q = p.position() + unit_from_heading(p.heading) * (distance - cum.back());
    return {q.x, q.y, p.heading};
  }
  const auto it = std::upper_bound(cum.begin(), cum.end(), distance);
  const std::size_t i = std::distance(cum.begin(), it) - 1;
  const double seg = cum[i + 1] - cum[i];
  const double u = seg > 0.0 ? (distance - cum[i]) / seg : 0.0;
  const Vec2 q = path[i].position() + (path[i + 1].position() - path[i].position()) * u;
  return {q.x, q.y, path[i].heading + u * wrap_angle(path[i + 1].heading - path[i].heading)};
}

}  // namespace

OverrideDecision backstop_check(const SceneContext& scene, const trajgen::Trajectory& planned,
                                const BackstopParams& params, const VehicleLimits& limits) {
  if (planned.waypoints.empty()) throw std::invalid_argument("backstop_check: empty trajectory");
  if (scene.agents.empty()) return OverrideDecision::none;

  const EgoState& ego = scene.ego;
  const double v = ego.speed;
  const double window = v / params.max_brake + params.lookahead_margin;

  // Path geometry of the plan, anchored at the current rear-axle pose.
  std::vector<Pose> path{ego.pose()};
  std::vector<double> cum{0.0};
  double plan_distance = 0.0;
  for (std::size_t i = 1; i < planned.waypoints.size(); ++i) {
    const auto& w = planned.waypoints[i];
    const double step = (Vec2{w.x, w.y} - path.back().position()).norm();
    const double t0 = (i - 1) * planned.dt, t1 = i * planned.dt;
    if (t0 < window) plan_distance += step * std::min(1.0, (window - t0) / (t1 - t0));
    if (step < 1e-9) continue;
    path.push_back({w.x, w.y, w.heading});
    cum.push_back(cum.back() + step);
  }
  const double reach = std::max(v * v / (2.0 * params.max_brake), plan_distance);

  std::vector<OrientedBox> obstacles;
  obstacles.reserve(scene.agents.size());
  for (const auto& a : scene.agents) obstacles.push_back(a.footprint());

  const int samples = static_cast<int>(std::ceil(reach / params.sample_spacing));
  for (int i = 0; i <= samples; ++i) {
    const Pose p = pose_along(path, cum, std::min(reach, i * params.sample_spacing));
    EgoState at = ego;
    at.position = p.position();
    at.heading = p.heading;
    const OrientedBox box = ego_footprint(at, limits).inflated(params.inflation);
    for (const auto& o : obstacles)
      if (boxes_overlap(box, o)) return OverrideDecision::emergency_stop;
  }
  return OverrideDecision::none;
}

CollisionStatus check_collision(const EgoState& ego, const std::vector<Agent>& agents,
                                const VehicleLimits& limits) {
  CollisionStatus st;
  const OrientedBox full = ego_footprint(ego, limits);
  const OrientedBox front = ego_front_half(ego, limits);
  for (const auto& a : agents) {
    const OrientedBox fp = a.footprint();
    if (!boxes_overlap(full, fp)) continue;
    if (!st.any) st.agent_id = a.id;
    st.any = true;
    if (ego.speed > 0.1 && boxes_overlap(front, fp)) {
      st.at_fault = true;
      st.agent_id = a.id;
    }
  }
  return st;
}

}  // namespace cdrive::world
