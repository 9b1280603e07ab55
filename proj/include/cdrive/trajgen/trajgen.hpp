#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "cdrive/trajgen/trajectory.hpp"
#include "cdrive/world/world.hpp"

namespace cdrive::trajgen {

/// Boundary conditions of a one-dimensional quintic on [0, T].
struct QuinticBC {
  double p0 = 0.0, v0 = 0.0, a0 = 0.0;
  double pT = 0.0, vT = 0.0, aT = 0.0;
  double T = 1.0;
};

/// Coefficients a0..a5 of p(t) = sum a_i t^i.
using QuinticCoeffs = std::array<double, 6>;

/// The unique quintic meeting all six boundary conditions (minimum jerk).
/// Throws std::invalid_argument for T <= 0 or T < 1e-3 s.
QuinticCoeffs quintic_coeffs(const QuinticBC& bc);

double quintic_eval(const QuinticCoeffs& c, double t, int derivative = 0);

enum class GeneratorTag { heuristic_grid, proposal };

struct CandidateSet {
  std::vector<Trajectory> candidates;
  std::vector<GeneratorTag> tags;
  std::vector<double> target_speeds;   // per candidate, m/s
  std::vector<double> target_offsets;  // per candidate, lateral m

  std::size_t size() const { return candidates.size(); }
};

struct TrajGenParams {
  int speed_samples = 11;
  int lateral_samples = 13;
  double speed_limit = 6.0;        // top of the terminal-speed grid
  double lateral_span = 1.8;       // grid covers [-span, +span]
  double dt = 0.5;
  double horizon = 10.0;
  double longitudinal_accel = 2.0; // peak accel used to size the speed transition
  double min_transition_time = 1.0;
  double lateral_transition = 8.0; // arclength over which the offset is reached
  bool proposals = true;
  double proposal_accel = 1.0;
  double proposal_decel = 2.0;
  double max_anchor_distance = 10.0;

  int heuristic_count() const { return speed_samples * lateral_samples; }
  int total_count() const { return heuristic_count() + (proposals ? 3 : 0); }
};

class NoRouteAnchor : public std::runtime_error {
 public:
  NoRouteAnchor() : std::runtime_error("no route anchor") {}
};

/// Heuristic grid (terminal speed x lateral offset) of jerk-optimal
/// candidates followed by three analytic proposals. Candidate index is
/// speed_index * lateral_samples + lateral_index for the grid part.
CandidateSet generate_candidates(const world::SceneContext& scene, const TrajGenParams& params = {});

/// Point offset laterally (left positive) from the route centerline.
world::FramePoint sample_route_frame(const world::Route& route, double arclength, double lateral);

}  // namespace cdrive::trajgen
