#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "cdrive/world/world.hpp"

namespace cdrive::harness {

struct Engage {};
struct Disengage {};
struct SetControl {
  double acceleration = 0.0;
  double steering = 0.0;
};
struct TeleportEgo {
  world::Pose pose;
  double speed = 0.0;
};
struct SpawnObject {
  world::Agent agent;  // stationary unless it carries a script
};
struct RemoveObject {
  std::string id;
};
struct SetLight {
  std::string id;
  world::LightState state = world::LightState::red;
};

using OperatorCommand = std::variant<Engage, Disengage, SetControl, TeleportEgo, SpawnObject, RemoveObject, SetLight>;

class CommandError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

const char* command_kind(const OperatorCommand& cmd);

// Wire form: {"kind": ..., fields...}. Extra keys ("type", "seq", "tick") are ignored.
nlohmann::json command_to_json(const OperatorCommand& cmd);
/// Throws CommandError on unknown kinds or missing/invalid fields.
OperatorCommand command_from_json(const nlohmann::json& j);

struct ScriptEntry {
  int tick = 0;  // applied before this tick is planned
  OperatorCommand command;
};
using CommandScript = std::vector<ScriptEntry>;

// JSON lines: {"tick": n, "kind": ..., ...}; blank lines and lines starting
// with '#' are skipped.
CommandScript read_script(std::istream& in);
CommandScript load_script(const std::string& path);
void write_script(std::ostream& out, const CommandScript& script);

}  // namespace cdrive::harness
