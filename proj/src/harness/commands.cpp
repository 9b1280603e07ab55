#include "cdrive/harness/commands.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace cdrive::harness {

using nlohmann::json;

namespace {

template <class... F>
struct overloaded : F... {
  using F::operator()...;
};
template <class... F>
overloaded(F...) -> overloaded<F...>;

double number(const json& j, const char* key) {
  if (!j.contains(key)) throw CommandError(std::string("missing field '") + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number()) throw CommandError(std::string("field '") + key + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw CommandError(std::string("field '") + key + "' must be finite");
  return x;
}

double number_or(const json& j, const char* key, double fallback) { return j.contains(key) ? number(j, key) : fallback; }

std::string text(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) throw CommandError(std::string("missing string field '") + key + "'");
  auto s = j.at(key).get<std::string>();
  if (s.empty()) throw CommandError(std::string("field '") + key + "' is empty");
  return s;
}

bool plain_stationary(const world::Agent& a) {
  return a.script.kind == world::ScriptKind::stationary && a.script.path.empty() && a.speed == 0.0 &&
         a.path_progress == 0.0;
}

}  // namespace

const char* command_kind(const OperatorCommand& cmd) {
  return std::visit(overloaded{[](const Engage&) { return "engage"; }, [](const Disengage&) { return "disengage"; },
                               [](const SetControl&) { return "set_control"; },
                               [](const TeleportEgo&) { return "teleport_ego"; },
                               [](const SpawnObject&) { return "spawn_object"; },
                               [](const RemoveObject&) { return "remove_object"; },
                               [](const SetLight&) { return "set_light"; }},
                    cmd);
}

json command_to_json(const OperatorCommand& cmd) {
  json j{{"kind", command_kind(cmd)}};
  std::visit(overloaded{[](const Engage&) {}, [](const Disengage&) {},
                        [&](const SetControl& c) {
                          j["acceleration"] = c.acceleration;
                          j["steering"] = c.steering;
                        },
                        [&](const TeleportEgo& c) {
                          j["x"] = c.pose.x;
                          j["y"] = c.pose.y;
                          j["heading"] = c.pose.heading;
                          j["speed"] = c.speed;
                        },
                        [&](const SpawnObject& c) {
                          const auto& a = c.agent;
                          if (!plain_stationary(a)) {
                            j["agent"] = world::format_agent_fields(a);
                            return;
                          }
                          j["id"] = a.id;
                          j["category"] = world::to_string(a.category);
                          j["x"] = a.pose.x;
                          j["y"] = a.pose.y;
                          j["heading"] = a.pose.heading;
                          j["length"] = a.length;
                          j["width"] = a.width;
                        },
                        [&](const RemoveObject& c) { j["id"] = c.id; },
                        [&](const SetLight& c) {
                          j["id"] = c.id;
                          j["state"] = c.state == world::LightState::red ? "red" : "green";
                        }},
             cmd);
  return j;
}

OperatorCommand command_from_json(const json& j) {
  if (!j.is_object()) throw CommandError("command must be an object");
  const std::string kind = text(j, "kind");
  if (kind == "engage") return Engage{};
  if (kind == "disengage") return Disengage{};
  if (kind == "set_control") return SetControl{number(j, "acceleration"), number(j, "steering")};
  if (kind == "teleport_ego")
    return TeleportEgo{{number(j, "x"), number(j, "y"), number_or(j, "heading", 0.0)}, number_or(j, "speed", 0.0)};
  if (kind == "spawn_object") {
    world::Agent a;
    if (j.contains("agent")) {
      try {
        a = world::parse_agent_fields(text(j, "agent"));
      } catch (const CommandError&) {
        throw;
      } catch (const std::exception& e) {
        throw CommandError(std::string("bad agent: ") + e.what());
      }
    } else {
      a.id = text(j, "id");
      try {
        a.category = world::category_from_string(text(j, "category"));
      } catch (const std::invalid_argument& e) {
        throw CommandError(e.what());
      }
      a.pose = {number(j, "x"), number(j, "y"), number_or(j, "heading", 0.0)};
      a.length = number_or(j, "length", a.length);
      a.width = number_or(j, "width", a.width);
      if (a.length <= 0 || a.width <= 0) throw CommandError("agent size must be positive");
    }
    return SpawnObject{a};
  }
  if (kind == "remove_object") return RemoveObject{text(j, "id")};
  if (kind == "set_light") {
    const auto s = text(j, "state");
    if (s != "red" && s != "green") throw CommandError("light state must be red or green");
    return SetLight{text(j, "id"), s == "red" ? world::LightState::red : world::LightState::green};
  }
  throw CommandError("unknown command kind '" + kind + "'");
}

CommandScript read_script(std::istream& in) {
  CommandScript script;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    try {
      const auto j = json::parse(line);
      if (!j.contains("tick") || !j.at("tick").is_number_integer()) throw CommandError("missing integer 'tick'");
      const int tick = j.at("tick");
      if (tick < 0) throw CommandError("negative tick");
      if (!script.empty() && tick < script.back().tick) throw CommandError("ticks must be non-decreasing");
      script.push_back({tick, command_from_json(j)});
    } catch (const std::exception& e) {
      throw CommandError("script line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return script;
}

CommandScript load_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open command script " + path);
  return read_script(in);
}

void write_script(std::ostream& out, const CommandScript& script) {
  for (const auto& e : script) {
    json j = command_to_json(e.command);
    j["tick"] = e.tick;
    out << j.dump() << '\n';
  }
}

}  // namespace cdrive::harness
