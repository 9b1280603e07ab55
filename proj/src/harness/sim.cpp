#include "cdrive/harness/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "cdrive/cwnet/cwnet.hpp"
#include "cdrive/planner/planner.hpp"

namespace cdrive::harness {

PlannerMode planner_mode_from_string(const std::string& s) {
  if (s == "blackbox") return PlannerMode::blackbox;
  if (s == "cwnet_causal") return PlannerMode::cwnet_causal;
  if (s == "cwnet_parallel") return PlannerMode::cwnet_parallel;
  throw std::invalid_argument("unknown planner mode '" + s + "'");
}

const char* to_string(PlannerMode m) {
  switch (m) {
    case PlannerMode::blackbox: return "blackbox";
    case PlannerMode::cwnet_causal: return "cwnet_causal";
    case PlannerMode::cwnet_parallel: return "cwnet_parallel";
  }
  return "?";
}

void SimConfig::validate() const {
  if (!(dt > 0 && sim_dt > 0 && duration >= 0)) throw std::invalid_argument("sim config: periods must be positive");
  const double n = dt / sim_dt;
  if (std::abs(n - std::round(n)) > 1e-9) throw std::invalid_argument("sim config: sim_dt must divide dt");
  if (!(tracker.segment > 0 && tracker.speed_gain > 0)) throw std::invalid_argument("sim config: bad tracker");
}

namespace {

struct Fnv {
  std::uint64_t h = 1469598103934665603ull;
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) h = (h ^ c[i]) * 1099511628211ull;
  }
  void num(double x) { bytes(&x, sizeof x); }
  void num(std::int64_t x) { bytes(&x, sizeof x); }
  void str(const std::string& s) {
    num(static_cast<std::int64_t>(s.size()));
    bytes(s.data(), s.size());
  }
};

double interp_speed(const trajgen::Trajectory& plan, double t) {
  const auto& w = plan.waypoints;
  const double x = std::clamp(t / plan.dt, 0.0, double(w.size() - 1));
  const auto i = std::min(static_cast<std::size_t>(x), w.size() - 1);
  if (i + 1 >= w.size()) return w.back().speed;
  const double f = x - i;
  return w[i].speed * (1 - f) + w[i + 1].speed * f;
}

}  // namespace

std::uint64_t scene_digest(const world::SceneContext& scene) {
  Fnv f;
  f.num(scene.timestamp);
  const auto& e = scene.ego;
  for (double x : {e.position.x, e.position.y, e.heading, e.speed, e.acceleration, e.steering_angle, e.wheelbase})
    f.num(x);
  f.num(static_cast<std::int64_t>(scene.agents.size()));
  for (const auto& a : scene.agents) {
    f.str(a.id);
    f.num(static_cast<std::int64_t>(a.category));
    for (double x : {a.pose.x, a.pose.y, a.pose.heading, a.speed, a.length, a.width}) f.num(x);
  }
  f.num(static_cast<std::int64_t>(scene.map_version));
  if (scene.map)
    for (const auto& m : *scene.map)
      if (const auto* l = std::get_if<world::TrafficLight>(&m)) {
        f.str(l->id);
        f.num(static_cast<std::int64_t>(l->state));
      }
  return f.h;
}

double nearest_gap(const world::EgoState& ego, const std::vector<world::Agent>& agents,
                   const world::VehicleLimits& limits) {
  if (agents.empty()) return -1.0;
  const auto box = world::ego_footprint(ego, limits);
  double best = INFINITY;
  for (const auto& a : agents) best = std::min(best, world::box_distance(box, a.footprint()));
  return best;
}

world::Control track(const trajgen::Trajectory& plan, const world::EgoState& ego, double elapsed,
                     const TrackerConfig& cfg, const world::VehicleLimits& limits) {
  if (plan.waypoints.empty()) throw std::invalid_argument("track: empty plan");
  constexpr double h = 0.1;
  const double v_ref = interp_speed(plan, elapsed);
  const double ff = (interp_speed(plan, elapsed + h) - v_ref) / h;
  world::Control c;
  c.acceleration = std::clamp(ff + cfg.speed_gain * (v_ref - ego.speed), -limits.max_decel, limits.max_accel);

  // Pure pursuit on the plan polyline.
  const auto& w = plan.waypoints;
  std::vector<double> cum{0.0};
  for (std::size_t i = 1; i < w.size(); ++i) cum.push_back(cum.back() + std::hypot(w[i].x - w[i - 1].x, w[i].y - w[i - 1].y));
  if (cum.back() < 1e-6) return c;
  double s0 = 0.0, best = INFINITY;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    const world::Vec2 a{w[i].x, w[i].y}, b{w[i + 1].x, w[i + 1].y};
    const world::Vec2 ab = b - a;
    const double len2 = ab.x * ab.x + ab.y * ab.y;
    if (len2 < 1e-12) continue;
    const double u = std::clamp(((ego.position.x - a.x) * ab.x + (ego.position.y - a.y) * ab.y) / len2, 0.0, 1.0);
    const double d = std::hypot(a.x + u * ab.x - ego.position.x, a.y + u * ab.y - ego.position.y);
    if (d < best) best = d, s0 = cum[i] + u * (cum[i + 1] - cum[i]);
  }
  const double target_s = s0 + std::max(cfg.min_lookahead, ego.speed * cfg.lookahead_time);
  world::Vec2 target;
  if (target_s >= cum.back()) {
    const auto& last = w.back();
    const double extra = target_s - cum.back();
    target = {last.x + extra * std::cos(last.heading), last.y + extra * std::sin(last.heading)};
  } else {
    const auto i = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), target_s) - cum.begin()) - 1;
    const double f = (target_s - cum[i]) / std::max(cum[i + 1] - cum[i], 1e-12);
    target = {w[i].x + f * (w[i + 1].x - w[i].x), w[i].y + f * (w[i + 1].y - w[i].y)};
  }
  const double dx = target.x - ego.position.x, dy = target.y - ego.position.y;
  const double dist = std::hypot(dx, dy);
  if (dist < 1e-6) return c;
  const double alpha = world::wrap_angle(std::atan2(dy, dx) - ego.heading);
  c.steering = std::clamp(std::atan(2.0 * ego.wheelbase * std::sin(alpha) / dist), -limits.max_steer, limits.max_steer);
  return c;
}

Simulator::Simulator(const world::Scenario& scenario, const planner::ModelBundle& bundle, SimConfig cfg)
    : bundle_(bundle), cfg_(std::move(cfg)), world_(scenario, cfg_.limits) {
  cfg_.validate();
  if (cfg_.mode != PlannerMode::blackbox && !bundle_.has_concepts())
    throw std::invalid_argument(std::string("planner mode ") + to_string(cfg_.mode) + " needs a concept head");
  total_ticks_ = static_cast<int>(std::lround(cfg_.duration / cfg_.dt));
  log_.scenario = scenario.name;
  log_.planner_mode = to_string(cfg_.mode);
  log_.seed = cfg_.seed;
  log_.dt = cfg_.dt;
  if (cfg_.mode != PlannerMode::blackbox) {
    log_.concept_schema = bundle_.concept_tag;
    log_.concept_names = bundle_.concept_schema().names();
  }
}

Ack Simulator::apply(const OperatorCommand& cmd) {
  Ack ack;
  const bool ok = std::visit(
      [&](const auto& c) -> bool {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Engage>) {
          autonomy_ = AutonomyMode::self_driving;
          manual_ = {};
        } else if constexpr (std::is_same_v<T, Disengage>) {
          autonomy_ = AutonomyMode::manual;
          manual_ = {};
        } else if constexpr (std::is_same_v<T, SetControl>) {
          if (autonomy_ != AutonomyMode::manual) {
            ack.message = "set_control needs manual mode; disengage first";
            return false;
          }
          manual_ = {c.acceleration, c.steering};
        } else if constexpr (std::is_same_v<T, TeleportEgo>) {
          if (c.speed < 0) {
            ack.message = "teleport speed must be non-negative";
            return false;
          }
          auto e = world_.ego();
          e.position = c.pose.position();
          e.heading = c.pose.heading;
          e.speed = c.speed;
          e.acceleration = 0.0;
          e.steering_angle = 0.0;
          world_.set_ego(e);
        } else if constexpr (std::is_same_v<T, SpawnObject>) {
          try {
            world_.spawn_agent(c.agent);
          } catch (const std::exception& e) {
            ack.message = e.what();
            return false;
          }
        } else if constexpr (std::is_same_v<T, RemoveObject>) {
          if (!world_.remove_agent(c.id)) {
            ack.message = "unknown object '" + c.id + "'";
            return false;
          }
        } else if constexpr (std::is_same_v<T, SetLight>) {
          if (!world_.set_light(c.id, c.state)) {
            ack.message = "unknown light '" + c.id + "'";
            return false;
          }
        }
        return true;
      },
      cmd);
  ack.ok = ok;
  if (ok) {
    ack.message = command_kind(cmd);
    pending_.push_back(command_to_json(cmd).dump());
  }
  return ack;
}

Simulator::Plan Simulator::plan(const world::SceneContext& scene) const {
  const auto view = planner::planner_view(scene, bundle_.schema);
  Plan p;
  planner::Ranking ranking;
  std::optional<cwnet::InterpretableRanking> ir;
  switch (cfg_.mode) {
    case PlannerMode::blackbox:
      ranking = planner::select_trajectory(bundle_, view, cfg_.trajgen);
      break;
    case PlannerMode::cwnet_causal:
      ir = cwnet::select_trajectory_interpretable(bundle_, view, cfg_.trajgen);
      break;
    case PlannerMode::cwnet_parallel:
      ir = cwnet::rank_parallel(bundle_, view, trajgen::generate_candidates(view, cfg_.trajgen).candidates);
      break;
  }
  if (ir) ranking = ir->ranking;
  p.trajectory = ranking.chosen;
  p.chosen = ranking.chosen_index;
  const auto& r = ranking.rewards;
  RewardSummary s;
  s.chosen = r[ranking.chosen_index];
  s.max = *std::max_element(r.begin(), r.end());
  s.min = *std::min_element(r.begin(), r.end());
  s.mean = 0.0;
  for (double x : r) s.mean += x;
  s.mean /= r.size();
  p.rewards = s;
  if (ir) {
    const auto schema = bundle_.concept_schema();
    const auto& act = ir->chosen.activations;
    p.activations.assign(act.data(), act.data() + act.size());
    const auto ex = cwnet::render_explanation(act, ranking, schema, scene.ego.speed);
    p.top_concept = ex.top_concept;
    p.explanation = ex.sentence;
  }
  return p;
}

trajgen::Trajectory Simulator::manual_preview(const world::EgoState& ego) const {
  trajgen::Trajectory t;
  t.dt = cfg_.trajgen.dt;
  auto e = ego;
  const int n = static_cast<int>(std::lround(cfg_.trajgen.horizon / t.dt));
  for (int i = 0; i <= n; ++i) {
    t.waypoints.push_back({e.position.x, e.position.y, e.heading, e.speed});
    e = world::step_ego(e, manual_, t.dt, cfg_.limits);
  }
  return t;
}

const Tick& Simulator::step() {
  if (finished()) throw std::logic_error("simulation already finished");
  Tick t;
  t.tick = next_tick_;
  t.time = next_tick_ * cfg_.dt;
  t.commands = std::move(pending_);
  pending_.clear();
  t.mode = autonomy_;

  const auto scene = world::build_scene(world_);
  t.scene_digest = scene_digest(scene);
  t.ego = scene.ego;
  t.nearest_gap = nearest_gap(scene.ego, scene.agents, cfg_.limits);

  bool estop = false;
  trajgen::Trajectory checked;
  if (autonomy_ == AutonomyMode::self_driving) {
    try {
      auto p = plan(scene);
      t.chosen_index = p.chosen;
      t.rewards = p.rewards;
      t.plan = std::move(p.trajectory);
      t.activations = std::move(p.activations);
      for (double a : t.activations) t.percentages.push_back(cwnet::to_percentage(a));
      t.top_concept = std::move(p.top_concept);
      t.explanation = std::move(p.explanation);
      checked = t.plan;
    } catch (const std::exception& e) {
      t.error = e.what();
      estop = true;
    }
  } else {
    checked = manual_preview(scene.ego);
  }
  if (!estop && cfg_.backstop &&
      world::backstop_check(scene, checked, cfg_.backstop_params, cfg_.limits) == world::OverrideDecision::emergency_stop) {
    t.backstop = true;
    estop = true;
  }

  const int substeps = static_cast<int>(std::lround(cfg_.dt / cfg_.sim_dt));
  for (int k = 0; k < substeps; ++k) {
    const auto& ego = world_.ego();
    world::Control c;
    if (estop)
      c = {-cfg_.backstop_params.max_brake, ego.steering_angle};
    else if (autonomy_ == AutonomyMode::self_driving && k * cfg_.sim_dt < cfg_.tracker.segment)
      c = track(t.plan, ego, k * cfg_.sim_dt, cfg_.tracker, cfg_.limits);
    else if (autonomy_ == AutonomyMode::self_driving)
      c = track(t.plan, ego, cfg_.tracker.segment, cfg_.tracker, cfg_.limits);
    else
      c = manual_;
    if (k == 0) t.control = c;
    world_.step(c, cfg_.sim_dt);
    const auto col = world::check_collision(world_.ego(), world_.agents(), cfg_.limits);
    if (col.any && !t.collision) {
      t.collision = true;
      t.at_fault = col.at_fault;
      t.collided_with = col.agent_id;
    }
  }
  log_.ticks.push_back(std::move(t));
  ++next_tick_;
  return log_.ticks.back();
}

DriveLog run_closed_loop(const world::Scenario& scenario, const planner::ModelBundle& bundle, const SimConfig& cfg,
                         const CommandScript& script) {
  Simulator sim(scenario, bundle, cfg);
  std::size_t next = 0;
  while (!sim.finished()) {
    for (; next < script.size() && script[next].tick <= sim.next_tick(); ++next) {
      const auto ack = sim.apply(script[next].command);
      if (!ack.ok)
        throw CommandError("tick " + std::to_string(sim.next_tick()) + " " + command_kind(script[next].command) + ": " +
                           ack.message);
    }
    sim.step();
  }
  return sim.log();
}

CommandScript script_from_log(const DriveLog& log) {
  CommandScript s;
  for (const auto& t : log.ticks)
    for (const auto& c : t.commands) s.push_back({t.tick, command_from_json(nlohmann::json::parse(c))});
  return s;
}

}  // namespace cdrive::harness
