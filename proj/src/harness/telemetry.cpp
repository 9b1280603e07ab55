#include "cdrive/harness/telemetry.hpp"

namespace cdrive::harness {

using nlohmann::json;

namespace {

json points(const std::vector<world::Vec2>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back({p.x, p.y});
  return a;
}

}  // namespace

json map_payload(const std::vector<world::MapElement>& map) {
  json lanes = json::array(), areas = json::array(), signs = json::array(), lights = json::array(),
       pudo = json::array();
  for (const auto& m : map) {
    if (const auto* l = std::get_if<world::Lane>(&m))
      lanes.push_back({{"id", l->id}, {"centerline", points(l->centerline)}, {"width", l->width}});
    else if (const auto* a = std::get_if<world::IntersectionArea>(&m))
      areas.push_back({{"id", a->id}, {"polygon", points(a->polygon)}});
    else if (const auto* s = std::get_if<world::StopSign>(&m))
      signs.push_back({{"id", s->id},
                       {"position", {s->position.x, s->position.y}},
                       {"stop_line", points({s->stop_line_a, s->stop_line_b})}});
    else if (const auto* t = std::get_if<world::TrafficLight>(&m))
      lights.push_back({{"id", t->id},
                        {"position", {t->position.x, t->position.y}},
                        {"stop_line", points({t->stop_line_a, t->stop_line_b})},
                        {"state", t->state == world::LightState::red ? "red" : "green"}});
    else if (const auto* p = std::get_if<world::PudoZone>(&m))
      pudo.push_back({{"id", p->id}, {"polygon", points(p->polygon)}});
  }
  return {{"lanes", lanes}, {"intersections", areas}, {"stop_signs", signs}, {"lights", lights}, {"pudo_zones", pudo}};
}

json hello_message(const Simulator& sim) {
  const auto& log = sim.log();
  return {{"type", "hello"},
          {"version", kWireVersion},
          {"scenario", log.scenario},
          {"planner_mode", log.planner_mode},
          {"seed", log.seed},
          {"dt", log.dt},
          {"total_ticks", sim.total_ticks()},
          {"concepts", log.concept_names}};
}

json snapshot_message(const Simulator& sim, bool include_map) {
  const auto& w = sim.world();
  const auto& e = w.ego();
  json agents = json::array();
  for (const auto& a : w.agents())
    agents.push_back({{"id", a.id},
                      {"category", world::to_string(a.category)},
                      {"x", a.pose.x},
                      {"y", a.pose.y},
                      {"heading", a.pose.heading},
                      {"length", a.length},
                      {"width", a.width},
                      {"speed", a.speed}});
  json m{{"type", "snapshot"},
         {"version", kWireVersion},
         {"time", w.time()},
         {"mode", to_string(sim.autonomy())},
         {"planner_mode", sim.log().planner_mode},
         {"finished", sim.finished()},
         {"ego", {{"x", e.position.x}, {"y", e.position.y}, {"heading", e.heading}, {"speed", e.speed}}},
         {"agents", agents},
         {"map_version", w.map_version()}};
  if (include_map) m["map"] = map_payload(*w.map());

  const auto& ticks = sim.log().ticks;
  if (ticks.empty()) {
    m["tick"] = nullptr;
    return m;
  }
  const auto& t = ticks.back();
  json traj = json::array();
  for (const auto& p : t.plan.waypoints) traj.push_back({p.x, p.y, p.speed});
  json concepts = json::array();
  const auto& names = sim.log().concept_names;
  for (std::size_t i = 0; i < t.percentages.size() && i < names.size(); ++i)
    concepts.push_back({{"name", names[i]}, {"percent", t.percentages[i]}});
  m["tick"] = t.tick;
  m["tick_mode"] = to_string(t.mode);
  m["trajectory"] = traj;
  m["chosen_index"] = t.chosen_index ? json(*t.chosen_index) : json(nullptr);
  m["concepts"] = concepts;
  m["top_concept"] = t.top_concept;
  m["explanation"] = t.explanation;
  m["backstop"] = t.backstop;
  m["collision"] = t.collision;
  m["error"] = t.error;
  m["commands"] = t.commands.size();
  return m;
}

json ack_message(std::optional<long> seq, const std::string& kind, int applies_at_tick) {
  return {{"type", "ack"}, {"seq", seq ? json(*seq) : json(nullptr)}, {"kind", kind}, {"tick", applies_at_tick}};
}

json error_message(std::optional<long> seq, const std::string& message) {
  return {{"type", "error"}, {"seq", seq ? json(*seq) : json(nullptr)}, {"message", message}};
}

json TelemetryStream::next(const Simulator& sim) {
  const int v = sim.world().map_version();
  const bool include = v != sent_version_;
  sent_version_ = v;
  return snapshot_message(sim, include);
}

}  // namespace cdrive::harness
