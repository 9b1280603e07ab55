#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace cdrive::world {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Vec2&) const = default;

  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
};

inline Vec2 unit_from_heading(double heading) { return {std::cos(heading), std::sin(heading)}; }

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  Vec2 position() const { return {x, y}; }
  bool operator==(const Pose&) const = default;
};

/// Rectangle with its center at `center`, long side along `heading`.
struct OrientedBox {
  Vec2 center;
  double heading = 0.0;
  double length = 0.0;
  double width = 0.0;

  /// Counter-clockwise corners starting at front-left.
  std::array<Vec2, 4> corners() const;
  OrientedBox inflated(double margin) const {
    return {center, heading, length + 2.0 * margin, width + 2.0 * margin};
  }
};

bool boxes_overlap(const OrientedBox& a, const OrientedBox& b);

/// Minimum distance between the two rectangles; 0 when they overlap.
double box_distance(const OrientedBox& a, const OrientedBox& b);

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);
bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d);

/// Even-odd rule; points on the boundary count as inside.
bool point_in_polygon(Vec2 p, std::span<const Vec2> polygon);
bool polygon_is_simple(std::span<const Vec2> polygon);
bool polygon_intersects_box(std::span<const Vec2> polygon, const OrientedBox& box);

struct FramePoint {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

struct Projection {
  double arclength = 0.0;
  double lateral = 0.0;   // left of the centerline is positive
  double heading = 0.0;   // centerline tangent at the projection
};

/// Smooth parameterization of a sampled centerline.
///
/// Vertex tangents come from the circle through each vertex and its
/// neighbours, and each segment is treated as the circular arc joining its
/// endpoints with the turn implied by those tangents. Samples of a straight
/// line or of a circle are therefore reproduced exactly, arclength included.
class Centerline {
 public:
  Centerline() = default;
  explicit Centerline(std::vector<Vec2> points);

  double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
  const std::vector<Vec2>& points() const { return points_; }

  /// Throws std::out_of_range when arclength lies outside [0, length()].
  FramePoint at(double arclength, double lateral) const;
  /// Same as at() but continues straight along the end tangents.
  FramePoint at_extrapolated(double arclength, double lateral) const;
  Projection project(Vec2 p) const;
  /// Signed curvature of the segment containing `arclength`.
  double curvature_at(double arclength) const;

 private:
  FramePoint on_segment(std::size_t seg, double offset, double lateral) const;

  std::vector<Vec2> points_;
  std::vector<double> cumulative_;    // arclength at each vertex
  std::vector<double> start_heading_; // per segment
  std::vector<double> turn_;          // per segment
  std::vector<double> seg_length_;    // per segment (arc length)
};

}  // namespace cdrive::world
