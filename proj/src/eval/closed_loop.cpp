#include "cdrive/eval/closed_loop.hpp"

#include <exception>
#include <optional>
#include <stdexcept>

#include "cdrive/data/dataset.hpp"

namespace cdrive::eval {

trajgen::Trajectory expert_reference(const world::Scenario& scn, double duration, double dt, double sim_dt,
                                     const data::ExpertConfig& expert) {
  trajgen::Trajectory ref;
  ref.dt = dt;
  for (const auto& e : data::expert_rollout(scn, duration, dt, sim_dt, expert))
    ref.waypoints.push_back({e.position.x, e.position.y, e.heading, e.speed});
  return ref;
}

SuiteResult evaluate_suite(const std::vector<world::Scenario>& scenarios, const planner::ModelBundle& bundle,
                           const harness::SimConfig& cfg, const data::ExpertConfig& expert, bool parallel) {
  const int n = static_cast<int>(scenarios.size());
  const double extra = cfg.trajgen.horizon + cfg.dt;
  std::vector<std::optional<SuiteRun>> slots(n);
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int i = 0; i < n; ++i) {
    try {
      trajgen::Trajectory ref;
      try {
        ref = expert_reference(scenarios[i], cfg.duration + extra, cfg.dt, cfg.sim_dt, expert);
      } catch (const std::runtime_error&) {
        continue;
      }
      auto log = harness::run_closed_loop(scenarios[i], bundle, cfg);
      auto m = driving_metrics(log, ref);
      slots[i] = SuiteRun{scenarios[i].name, m, std::move(log)};
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  SuiteResult out;
  std::vector<MetricsReport> reports;
  for (int i = 0; i < n; ++i) {
    if (!slots[i]) {
      out.skipped.push_back(scenarios[i].name);
      continue;
    }
    reports.push_back(slots[i]->metrics);
    out.runs.push_back(std::move(*slots[i]));
  }
  if (reports.empty()) throw std::runtime_error("evaluate_suite: no scenario has an expert reference");
  out.overall = aggregate(reports);
  return out;
}

}  // namespace cdrive::eval
