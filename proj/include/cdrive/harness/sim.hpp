#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cdrive/harness/commands.hpp"
#include "cdrive/harness/drive_log.hpp"
#include "cdrive/planner/model.hpp"
#include "cdrive/trajgen/trajgen.hpp"

namespace cdrive::harness {

enum class PlannerMode { blackbox, cwnet_causal, cwnet_parallel };
PlannerMode planner_mode_from_string(const std::string& s);
const char* to_string(PlannerMode m);

struct TrackerConfig {
  double speed_gain = 2.0;        // 1/s, proportional speed law
  double min_lookahead = 2.5;     // m, pure pursuit on the plan
  double lookahead_time = 0.8;    // s
  double segment = 0.5;           // s of each plan that is executed
};

struct SimConfig {
  PlannerMode mode = PlannerMode::blackbox;
  double duration = 30.0;  // s; ticks = round(duration / dt)
  double dt = 0.5;         // planning period
  double sim_dt = 0.1;     // physics substep
  bool backstop = true;
  world::BackstopParams backstop_params;
  trajgen::TrajGenParams trajgen;
  TrackerConfig tracker;
  world::VehicleLimits limits;
  std::uint64_t seed = 0;  // recorded; scenario variants are drawn from it by the catalog

  /// Throws std::invalid_argument on non-positive periods or sim_dt not dividing dt.
  void validate() const;
};

struct Ack {
  bool ok = true;
  std::string message;
};

/// FNV-1a over the scene's ego, agents, light states and map version.
std::uint64_t scene_digest(const world::SceneContext& scene);

/// Gap between the ego footprint and the nearest agent; -1 without agents.
double nearest_gap(const world::EgoState& ego, const std::vector<world::Agent>& agents,
                   const world::VehicleLimits& limits);

/// Control that tracks `plan` at `elapsed` seconds into its execution.
world::Control track(const trajgen::Trajectory& plan, const world::EgoState& ego, double elapsed,
                     const TrackerConfig& cfg, const world::VehicleLimits& limits);

/// Closed-loop session: one owner advances planning cycles; operator
/// commands are applied between cycles.
class Simulator {
 public:
  /// `bundle` must outlive the simulator. Throws std::invalid_argument when
  /// the mode needs concept heads the bundle lacks.
  Simulator(const world::Scenario& scenario, const planner::ModelBundle& bundle, SimConfig cfg);

  /// Validates against the current world; accepted commands take effect
  /// before the next tick and are recorded on it.
  Ack apply(const OperatorCommand& cmd);
  /// Runs one planning cycle and returns its log entry.
  const Tick& step();

  bool finished() const { return next_tick_ >= total_ticks_; }
  int total_ticks() const { return total_ticks_; }
  int next_tick() const { return next_tick_; }
  AutonomyMode autonomy() const { return autonomy_; }
  const world::World& world() const { return world_; }
  const DriveLog& log() const { return log_; }
  const SimConfig& config() const { return cfg_; }
  const std::vector<std::string>& concept_names() const { return log_.concept_names; }

 private:
  struct Plan {
    trajgen::Trajectory trajectory;
    std::optional<int> chosen;
    std::optional<RewardSummary> rewards;
    std::vector<double> activations;
    std::string top_concept, explanation;
  };
  Plan plan(const world::SceneContext& scene) const;
  trajgen::Trajectory manual_preview(const world::EgoState& ego) const;

  const planner::ModelBundle& bundle_;
  SimConfig cfg_;
  world::World world_;
  AutonomyMode autonomy_ = AutonomyMode::self_driving;
  world::Control manual_;
  std::vector<std::string> pending_;
  int next_tick_ = 0;
  int total_ticks_ = 0;
  DriveLog log_;
};

/// Runs a whole scenario; scripted commands are applied before their tick
/// through the same path as live commands. Rejected script entries throw
/// CommandError.
DriveLog run_closed_loop(const world::Scenario& scenario, const planner::ModelBundle& bundle, const SimConfig& cfg,
                         const CommandScript& script = {});

/// The operator commands recorded in a log, as a replayable script.
CommandScript script_from_log(const DriveLog& log);

}  // namespace cdrive::harness
