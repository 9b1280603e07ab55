#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cdrive/trajgen/trajectory.hpp"
#include "cdrive/world/world.hpp"

namespace cdrive::harness {

enum class AutonomyMode { manual, self_driving };
const char* to_string(AutonomyMode m);
AutonomyMode autonomy_from_string(const std::string& s);

struct RewardSummary {
  double chosen = 0.0;
  double max = 0.0;
  double min = 0.0;
  double mean = 0.0;
};

/// State at the start of a planning cycle and what the stack did with it.
struct Tick {
  int tick = 0;
  double time = 0.0;
  std::uint64_t scene_digest = 0;
  AutonomyMode mode = AutonomyMode::self_driving;
  world::EgoState ego;
  std::optional<int> chosen_index;
  std::optional<RewardSummary> rewards;
  trajgen::Trajectory plan;         // empty on manual ticks
  std::vector<double> activations;  // concept schema order; empty without a concept head
  std::vector<int> percentages;
  std::string top_concept;
  std::string explanation;
  bool backstop = false;
  world::Control control;             // applied for the following cycle
  std::vector<std::string> commands;  // operator commands applied before this tick, wire form
  double nearest_gap = -1.0;          // ego footprint to nearest agent, m; -1 without agents
  bool collision = false;
  bool at_fault = false;
  std::string collided_with;
  std::string error;
};

struct DriveLog {
  std::string scenario;
  std::string planner_mode;
  std::uint64_t seed = 0;
  double dt = 0.5;
  std::string concept_schema;  // empty without a concept head
  std::vector<std::string> concept_names;
  std::vector<Tick> ticks;

  /// Index of `name` in concept_names; -1 when absent.
  int concept_index(const std::string& name) const;
};

// JSON lines: a header object, then one object per tick.
void write_drive_log(std::ostream& out, const DriveLog& log);
std::string format_drive_log(const DriveLog& log);
DriveLog read_drive_log(std::istream& in);
void save_drive_log(const DriveLog& log, const std::string& path);
DriveLog load_drive_log(const std::string& path);

}  // namespace cdrive::harness
