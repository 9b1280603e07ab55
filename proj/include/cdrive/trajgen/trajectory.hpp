#pragma once

#include <cmath>
#include <vector>

namespace cdrive::trajgen {

struct Waypoint {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double speed = 0.0;

  bool operator==(const Waypoint&) const = default;
};

/// Waypoints sampled every `dt` seconds, starting at t = 0.
struct Trajectory {
  std::vector<Waypoint> waypoints;
  double dt = 0.5;

  double horizon() const { return waypoints.empty() ? 0.0 : (waypoints.size() - 1) * dt; }
  bool operator==(const Trajectory&) const = default;

  /// Throws std::invalid_argument when speeds are negative or coordinates
  /// are not finite.
  void validate() const;
};

/// Mean Euclidean displacement over matched waypoints.
double average_l2(const Trajectory& a, const Trajectory& b);

}  // namespace cdrive::trajgen
