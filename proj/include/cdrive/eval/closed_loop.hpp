#pragma once

#include <string>
#include <vector>

#include "cdrive/data/expert.hpp"
#include "cdrive/eval/metrics.hpp"
#include "cdrive/harness/sim.hpp"

namespace cdrive::eval {

/// Expert poses for `scn` at `dt` spacing covering `duration` seconds.
/// Throws std::runtime_error when the expert run collides.
trajgen::Trajectory expert_reference(const world::Scenario& scn, double duration, double dt, double sim_dt,
                                     const data::ExpertConfig& expert = {});

struct SuiteRun {
  std::string scenario;
  MetricsReport metrics;
  harness::DriveLog log;
};

struct SuiteResult {
  std::vector<SuiteRun> runs;
  std::vector<std::string> skipped;  // expert reference unavailable
  MetricsReport overall;
};

/// Closed-loop runs of every scenario scored against the expert. The
/// reference extends one plan horizon past the run so every horizon metric
/// is measurable.
SuiteResult evaluate_suite(const std::vector<world::Scenario>& scenarios, const planner::ModelBundle& bundle,
                           const harness::SimConfig& cfg, const data::ExpertConfig& expert = {},
                           bool parallel = true);

}  // namespace cdrive::eval
