#include "cdrive/harness/drive_log.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace cdrive::harness {

using nlohmann::json;

const char* to_string(AutonomyMode m) { return m == AutonomyMode::manual ? "manual" : "self_driving"; }

AutonomyMode autonomy_from_string(const std::string& s) {
  if (s == "manual") return AutonomyMode::manual;
  if (s == "self_driving") return AutonomyMode::self_driving;
  throw std::invalid_argument("unknown autonomy mode '" + s + "'");
}

int DriveLog::concept_index(const std::string& name) const {
  for (std::size_t i = 0; i < concept_names.size(); ++i)
    if (concept_names[i] == name) return static_cast<int>(i);
  return -1;
}

namespace {

json tick_json(const Tick& t) {
  const auto& e = t.ego;
  json plan = json::array();
  for (const auto& w : t.plan.waypoints) plan.push_back({w.x, w.y, w.heading, w.speed});
  json j = {{"tick", t.tick},
            {"t", t.time},
            {"digest", t.scene_digest},
            {"mode", to_string(t.mode)},
            {"ego", {e.position.x, e.position.y, e.heading, e.speed, e.acceleration, e.steering_angle, e.wheelbase}},
            {"chosen", t.chosen_index ? json(*t.chosen_index) : json(nullptr)},
            {"rewards", t.rewards ? json{t.rewards->chosen, t.rewards->max, t.rewards->min, t.rewards->mean}
                                  : json(nullptr)},
            {"plan_dt", t.plan.dt},
            {"plan", plan},
            {"activations", t.activations},
            {"percentages", t.percentages},
            {"top_concept", t.top_concept},
            {"explanation", t.explanation},
            {"backstop", t.backstop},
            {"control", {t.control.acceleration, t.control.steering}},
            {"commands", t.commands},
            {"nearest_gap", t.nearest_gap},
            {"collision", t.collision},
            {"at_fault", t.at_fault},
            {"collided_with", t.collided_with},
            {"error", t.error}};
  return j;
}

Tick tick_from(const json& j) {
  Tick t;
  t.tick = j.at("tick");
  t.time = j.at("t");
  t.scene_digest = j.at("digest").get<std::uint64_t>();
  t.mode = autonomy_from_string(j.at("mode"));
  const auto e = j.at("ego").get<std::vector<double>>();
  if (e.size() != 7) throw std::runtime_error("ego needs 7 values");
  t.ego.position = {e[0], e[1]};
  t.ego.heading = e[2];
  t.ego.speed = e[3];
  t.ego.acceleration = e[4];
  t.ego.steering_angle = e[5];
  t.ego.wheelbase = e[6];
  if (!j.at("chosen").is_null()) t.chosen_index = j.at("chosen").get<int>();
  if (!j.at("rewards").is_null()) {
    const auto r = j.at("rewards").get<std::vector<double>>();
    if (r.size() != 4) throw std::runtime_error("rewards need 4 values");
    t.rewards = RewardSummary{r[0], r[1], r[2], r[3]};
  }
  t.plan.dt = j.at("plan_dt");
  for (const auto& w : j.at("plan")) {
    const auto v = w.get<std::vector<double>>();
    if (v.size() != 4) throw std::runtime_error("plan waypoint needs 4 values");
    t.plan.waypoints.push_back({v[0], v[1], v[2], v[3]});
  }
  t.activations = j.at("activations").get<std::vector<double>>();
  t.percentages = j.at("percentages").get<std::vector<int>>();
  t.top_concept = j.at("top_concept");
  t.explanation = j.at("explanation");
  t.backstop = j.at("backstop");
  const auto c = j.at("control").get<std::vector<double>>();
  if (c.size() != 2) throw std::runtime_error("control needs 2 values");
  t.control = {c[0], c[1]};
  t.commands = j.at("commands").get<std::vector<std::string>>();
  t.nearest_gap = j.at("nearest_gap");
  t.collision = j.at("collision");
  t.at_fault = j.at("at_fault");
  t.collided_with = j.at("collided_with");
  t.error = j.at("error");
  return t;
}

}  // namespace

void write_drive_log(std::ostream& out, const DriveLog& log) {
  out << json{{"kind", "drive_log"},
              {"version", 1},
              {"scenario", log.scenario},
              {"planner_mode", log.planner_mode},
              {"seed", log.seed},
              {"dt", log.dt},
              {"concept_schema", log.concept_schema},
              {"concepts", log.concept_names}}
             .dump()
      << '\n';
  for (const auto& t : log.ticks) out << tick_json(t).dump() << '\n';
}

std::string format_drive_log(const DriveLog& log) {
  std::ostringstream s;
  write_drive_log(s, log);
  return s.str();
}

DriveLog read_drive_log(std::istream& in) {
  DriveLog log;
  std::string line;
  int lineno = 0;
  try {
    if (!std::getline(in, line)) throw std::runtime_error("missing header");
    ++lineno;
    const json h = json::parse(line);
    if (h.at("kind") != "drive_log" || h.at("version") != 1) throw std::runtime_error("not a version 1 drive log");
    log.scenario = h.at("scenario");
    log.planner_mode = h.at("planner_mode");
    log.seed = h.at("seed").get<std::uint64_t>();
    log.dt = h.at("dt");
    log.concept_schema = h.at("concept_schema");
    log.concept_names = h.at("concepts").get<std::vector<std::string>>();
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      log.ticks.push_back(tick_from(json::parse(line)));
    }
  } catch (const std::exception& e) {
    throw std::runtime_error("drive log line " + std::to_string(lineno) + ": " + e.what());
  }
  return log;
}

void save_drive_log(const DriveLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write drive log " + path);
  write_drive_log(out, log);
}

DriveLog load_drive_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open drive log " + path);
  return read_drive_log(in);
}

}  // namespace cdrive::harness
