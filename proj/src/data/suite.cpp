#include "cdrive/data/suite.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace cdrive::data {

using world::Agent;
using world::AgentCategory;
using world::Vec2;

std::vector<Vec2> road_polyline(const std::vector<RoadSegment>& segments, double spacing) {
  if (!(spacing > 0.0)) throw std::invalid_argument("road_polyline: spacing must be positive");
  std::vector<Vec2> pts{{0.0, 0.0}};
  Vec2 p{0.0, 0.0};
  double h = 0.0;
  for (const auto& seg : segments) {
    if (!(seg.length > 0.0)) throw std::invalid_argument("road_polyline: segment length must be positive");
    const int n = std::max(1, static_cast<int>(std::ceil(seg.length / spacing)));
    const double ds = seg.length / n;
    const Vec2 p0 = p;
    const double h0 = h;
    for (int i = 1; i <= n; ++i) {
      const double s = ds * i;
      if (seg.curvature == 0.0) {
        p = p0 + world::unit_from_heading(h0) * s;
      } else {
        const double r = 1.0 / seg.curvature;
        h = h0 + s * seg.curvature;
        p = {p0.x + r * (std::sin(h) - std::sin(h0)), p0.y - r * (std::cos(h) - std::cos(h0))};
      }
      pts.push_back(p);
    }
    h = h0 + seg.length * seg.curvature;
  }
  return pts;
}

SuiteSpec suite_spec(const std::string& name) {
  SuiteSpec s;
  s.name = name;
  s.shapes = {"straight", "left", "right", "s_curve"};
  if (name == "full") return s;
  if (name == "nominal") {
    s.p_cyclists = 0.0;
    s.p_cones = 0.0;
    return s;
  }
  if (name == "turns") {
    s.shapes = {"left", "right"};
    s.p_cyclists = 0.0;
    return s;
  }
  if (name == "straights") {
    s.shapes = {"straight"};
    s.p_cyclists = 0.0;
    return s;
  }
  if (name == "cyclists") {
    s.p_cyclists = 1.0;
    s.p_cones = 0.0;
    return s;
  }
  throw std::invalid_argument("unknown suite '" + name + "'");
}

std::vector<std::string> suite_names() { return {"full", "nominal", "turns", "straights", "cyclists"}; }

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ull + index + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

namespace {

struct Builder {
  std::mt19937_64 rng;
  world::Centerline cl;
  world::Scenario scn;
  int next_id = 0;

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
  bool chance(double p) { return p > 0.0 && uniform(0.0, 1.0) < p; }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); }

  Vec2 at(double s, double lateral) const {
    const auto f = cl.at_extrapolated(s, lateral);
    return {f.x, f.y};
  }
  double heading(double s) const { return cl.at_extrapolated(s, 0.0).heading; }

  std::string id(const char* prefix) { return prefix + std::to_string(next_id++); }

  Agent stationary(const char* prefix, AgentCategory cat, double s, double lateral, double len, double wid) {
    Agent a;
    a.id = id(prefix);
    a.category = cat;
    const Vec2 p = at(s, lateral);
    a.pose = {p.x, p.y, heading(s)};
    a.length = len;
    a.width = wid;
    return a;
  }

  // moves along the road at a lateral offset from s0 to past the route end
  Agent along(const char* prefix, AgentCategory cat, double s0, double lateral, double cruise, double delay,
              double len, double wid) {
    Agent a = stationary(prefix, cat, s0, lateral, len, wid);
    a.script.kind = world::ScriptKind::follow_path;
    a.script.cruise_speed = cruise;
    a.script.start_delay = delay;
    for (double s = s0; s <= cl.length() + 40.0; s += 1.0) a.script.path.push_back(at(s, lateral));
    return a;
  }
};

}  // namespace

world::Scenario procedural_scenario(const SuiteSpec& spec, std::uint64_t seed) {
  if (spec.shapes.empty()) throw std::invalid_argument("suite has no road shapes");
  Builder b{std::mt19937_64(seed), {}, {}, 0};
  const std::string shape = spec.shapes[b.integer(0, static_cast<int>(spec.shapes.size()) - 1)];

  std::vector<RoadSegment> segs;
  double turn_start = -1.0;
  if (shape == "straight") {
    segs = {{130.0, 0.0}};
  } else if (shape == "left" || shape == "right") {
    const double lead_in = b.uniform(30.0, 50.0), r = b.uniform(12.0, 25.0);
    const double k = (shape == "left" ? 1.0 : -1.0) / r;
    segs = {{lead_in, 0.0}, {r * M_PI / 2.0, k}, {45.0, 0.0}};
    turn_start = lead_in;
  } else if (shape == "s_curve") {
    const double r = b.uniform(20.0, 35.0), ang = b.uniform(M_PI / 4.0, M_PI / 3.0);
    const double sign = b.chance(0.5) ? 1.0 : -1.0;
    segs = {{25.0, 0.0}, {r * ang, sign / r}, {10.0, 0.0}, {r * ang, -sign / r}, {40.0, 0.0}};
  } else {
    throw std::invalid_argument("unknown road shape '" + shape + "'");
  }
  const auto pts = road_polyline(segs);
  b.cl = world::Centerline(pts);
  const double len = b.cl.length();

  world::Scenario& scn = b.scn;
  scn.name = spec.name + "_" + shape;
  scn.duration = spec.duration;
  scn.map.push_back(world::Lane{"L0", pts, 3.5});
  scn.route_lanes = {"L0"};
  scn.goal_arclength = len - 8.0;

  const Vec2 start = b.at(5.0, 0.0);
  scn.ego.position = start;
  scn.ego.heading = b.heading(5.0);
  scn.ego.speed = b.uniform(0.0, 4.0);

  if (b.chance(spec.p_stop_control)) {
    const double sc = turn_start > 0.0 ? turn_start - 4.0 : b.uniform(35.0, std::min(70.0, len - 30.0));
    world::IntersectionArea ia{"I0", {b.at(sc, -7.0), b.at(sc + 14.0, -7.0), b.at(sc + 14.0, 7.0), b.at(sc, 7.0)}};
    scn.map.push_back(ia);
    if (b.chance(0.5)) {
      scn.map.push_back(world::StopSign{"S0", b.at(sc, -2.5), b.at(sc, -1.75), b.at(sc, 1.75)});
    } else {
      world::TrafficLight tl{"T0", b.at(sc, -2.5), b.at(sc, -1.75), b.at(sc, 1.75), world::LightState::red, {}};
      world::LightCycle cyc{b.uniform(5.0, 10.0), b.uniform(6.0, 12.0), 0.0};
      cyc.offset = b.uniform(0.0, cyc.red + cyc.green);
      tl.cycle = cyc;
      scn.map.push_back(tl);
    }
  }

  const double traffic = b.uniform(0.0, 1.0);
  if (traffic < spec.p_lead) {
    scn.agents.push_back(
        b.along("lead", AgentCategory::vehicle, b.uniform(14.0, 30.0), 0.0, b.uniform(2.0, 4.5), 0.0, 4.5, 1.8));
  } else if (traffic < spec.p_lead + spec.p_stopped_vehicle) {
    scn.agents.push_back(b.along("stopped", AgentCategory::vehicle, b.uniform(18.0, 40.0), 0.0, b.uniform(2.0, 4.0),
                                 b.uniform(3.0, 14.0), 4.5, 1.8));
  }

  if (b.chance(spec.p_parked_row)) {
    const double side = b.chance(0.5) ? 1.0 : -1.0;
    const double lateral = side * b.uniform(3.1, 3.6);
    double s = b.uniform(12.0, len - 40.0);
    const int n = b.integer(2, 5);
    for (int i = 0; i < n; ++i, s += b.uniform(6.0, 7.5))
      scn.agents.push_back(b.stationary("parked", AgentCategory::vehicle, s, lateral, 4.5, 1.8));
  }

  if (b.chance(spec.p_pedestrians)) {
    const int n = b.integer(1, 2);
    for (int i = 0; i < n; ++i) {
      const double side = b.chance(0.5) ? 1.0 : -1.0;
      if (b.chance(0.5)) {
        const double s = b.uniform(25.0, len - 30.0);
        Agent a = b.stationary("ped", AgentCategory::pedestrian, s, side * 7.0, 0.6, 0.6);
        a.script.kind = world::ScriptKind::follow_path;
        a.script.path = {b.at(s, side * 7.0), b.at(s, -side * 7.0)};
        a.script.cruise_speed = b.uniform(0.8, 1.4);
        a.script.start_delay = b.uniform(0.0, 15.0);
        scn.agents.push_back(a);
      } else {
        scn.agents.push_back(b.stationary("ped", AgentCategory::pedestrian, b.uniform(10.0, len - 10.0),
                                          side * b.uniform(3.0, 5.0), 0.6, 0.6));
      }
    }
  }

  if (b.chance(spec.p_cyclists)) {
    if (b.chance(0.6))
      scn.agents.push_back(b.along("bike", AgentCategory::cyclist, b.uniform(15.0, 35.0), -0.8, b.uniform(2.0, 3.5),
                                   0.0, 1.8, 0.6));
    else
      scn.agents.push_back(b.along("bike", AgentCategory::cyclist, b.uniform(0.0, 40.0), -2.6, b.uniform(3.0, 5.0),
                                   0.0, 1.8, 0.6));
  }

  if (b.chance(spec.p_pudo)) {
    const double s = b.uniform(30.0, len - 25.0);
    scn.map.push_back(world::PudoZone{"P0", {b.at(s, -3.5), b.at(s + 15.0, -3.5), b.at(s + 15.0, 1.75), b.at(s, 1.75)}});
    if (b.chance(0.5)) scn.goal_arclength = s + 10.0;
  }

  if (b.chance(spec.p_cones)) {
    const double side = b.chance(0.5) ? 1.0 : -1.0;
    double s = b.uniform(15.0, len - 30.0);
    const int n = b.integer(2, 4);
    for (int i = 0; i < n; ++i, s += b.uniform(2.0, 4.0))
      scn.agents.push_back(b.stationary("cone", AgentCategory::cone, s, side * b.uniform(2.0, 2.6), 0.4, 0.4));
  }
  return scn;
}

}  // namespace cdrive::data
