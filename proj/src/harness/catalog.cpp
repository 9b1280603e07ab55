#include "cdrive/harness/catalog.hpp"

#include <algorithm>
#include <filesystem>
#include <random>
#include <stdexcept>

#include "cdrive/data/suite.hpp"

namespace cdrive::harness {

using world::Agent;
using world::AgentCategory;

namespace {

constexpr double kRoadStart = -20.0;

world::Scenario straight_road(const std::string& name, double length) {
  world::Scenario s;
  s.name = name;
  s.map.push_back(world::Lane{"L0", {{kRoadStart, 0.0}, {kRoadStart + length, 0.0}}, 3.5});
  s.route_lanes = {"L0"};
  s.duration = 30.0;
  return s;
}

Agent box(const std::string& id, AgentCategory cat, double x, double y, double length, double width) {
  Agent a;
  a.id = id;
  a.category = cat;
  a.pose = {x, y, 0.0};
  a.length = length;
  a.width = width;
  return a;
}

// seed 0 returns the midpoint of [a, b]
struct Jitter {
  std::mt19937_64 rng;
  bool canonical;
  double operator()(double a, double b) {
    return canonical ? 0.5 * (a + b) : std::uniform_real_distribution<double>(a, b)(rng);
  }
};

world::Scenario parked_row_pudo(Jitter& j) {
  auto s = straight_road("parked_row_pudo", 160.0);
  s.ego.speed = j(3.0, 5.0);
  const double y = -3.3;
  int k = 0;
  for (double x = 30.0; x <= 80.0; x += j(6.0, 7.0)) s.agents.push_back(box("parked" + std::to_string(k++), AgentCategory::vehicle, x, y, 4.5, 1.8));
  s.map.push_back(world::PudoZone{"P0", {{45.0, -4.5}, {65.0, -4.5}, {65.0, 1.75}, {45.0, 1.75}}});
  s.goal_arclength = j(54.0, 58.0) - kRoadStart;
  return s;
}

world::Scenario cone_phantom(Jitter& j) {
  auto s = straight_road("cone_phantom", 200.0);
  s.ego.speed = j(3.0, 5.0);
  s.agents.push_back(box("cone0", AgentCategory::cone, j(35.0, 45.0), -1.9, 0.4, 0.4));
  return s;
}

world::Scenario cyclist_unseen(Jitter& j) {
  auto s = straight_road("cyclist_unseen", 220.0);
  s.ego.speed = j(3.0, 5.0);
  const double x0 = j(18.0, 30.0), lateral = j(-0.9, -0.3);
  Agent c = box("cyclist0", AgentCategory::cyclist, x0, lateral, 1.8, 0.6);
  c.script.kind = world::ScriptKind::follow_path;
  c.script.cruise_speed = j(1.5, 2.5);
  c.script.path = {{x0, lateral}, {kRoadStart + 260.0, lateral}};
  s.agents.push_back(c);
  return s;
}

}  // namespace

std::vector<std::string> catalog_names() { return {"empty", "parked_row_pudo", "cone_phantom", "cyclist_unseen"}; }

world::Scenario catalog_scenario(const std::string& name, std::uint64_t seed) {
  Jitter j{std::mt19937_64(data::mix_seed(seed, 0x5ce4a7)), seed == 0};
  if (name == "empty") {
    auto s = straight_road("empty", 200.0);
    s.ego.speed = j(3.0, 5.0);
    return s;
  }
  if (name == "parked_row_pudo") return parked_row_pudo(j);
  if (name == "cone_phantom") return cone_phantom(j);
  if (name == "cyclist_unseen") return cyclist_unseen(j);
  if (name.rfind("nominal/", 0) == 0) {
    std::size_t used = 0;
    const int i = std::stoi(name.substr(8), &used);
    if (i < 0 || used + 8 != name.size()) throw std::invalid_argument("bad nominal index in '" + name + "'");
    auto s = data::procedural_scenario(data::suite_spec("nominal"), data::mix_seed(seed, i));
    s.name = name;
    return s;
  }
  throw std::invalid_argument("unknown scenario '" + name + "'");
}

std::vector<world::Scenario> nominal_suite(int count, std::uint64_t seed) {
  std::vector<world::Scenario> out;
  for (int i = 0; i < count; ++i) out.push_back(catalog_scenario("nominal/" + std::to_string(i), seed));
  return out;
}

world::Scenario resolve_scenario(const std::string& name_or_path, std::uint64_t seed) {
  const auto names = catalog_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end() || name_or_path.rfind("nominal/", 0) == 0)
    return catalog_scenario(name_or_path, seed);
  if (!std::filesystem::exists(name_or_path))
    throw std::invalid_argument("'" + name_or_path + "' is neither a catalog scenario nor a file");
  return world::load_scenario(name_or_path);
}

}  // namespace cdrive::harness
