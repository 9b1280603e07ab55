#include "cdrive/world/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace cdrive::world {

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a <= 0.0) a += two_pi;
  return a - std::numbers::pi;
}

std::array<Vec2, 4> OrientedBox::corners() const {
  const Vec2 f = unit_from_heading(heading) * (0.5 * length);
  const Vec2 l = Vec2{-std::sin(heading), std::cos(heading)} * (0.5 * width);
  return {center + f + l, center - f + l, center - f - l, center + f - l};
}

namespace {

bool separated_on_axis(const std::array<Vec2, 4>& a, const std::array<Vec2, 4>& b, Vec2 axis) {
  double amin = std::numeric_limits<double>::infinity(), amax = -amin;
  double bmin = amin, bmax = -amin;
  for (const auto& p : a) {
    const double d = p.dot(axis);
    amin = std::min(amin, d);
    amax = std::max(amax, d);
  }
  for (const auto& p : b) {
    const double d = p.dot(axis);
    bmin = std::min(bmin, d);
    bmax = std::max(bmax, d);
  }
  return amax < bmin || bmax < amin;
}

double orient(Vec2 a, Vec2 b, Vec2 c) { return (b - a).cross(c - a); }

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) - 1e-12 <= p.x && p.x <= std::max(a.x, b.x) + 1e-12 &&
         std::min(a.y, b.y) - 1e-12 <= p.y && p.y <= std::max(a.y, b.y) + 1e-12;
}

}  // namespace

bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  for (double h : {a.heading, a.heading + std::numbers::pi / 2, b.heading,
                   b.heading + std::numbers::pi / 2}) {
    if (separated_on_axis(ca, cb, unit_from_heading(h))) return false;
  }
  return true;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = ab.dot(ab);
  double u = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  u = std::clamp(u, 0.0, 1.0);
  return (p - (a + ab * u)).norm();
}

double box_distance(const OrientedBox& a, const OrientedBox& b) {
  if (boxes_overlap(a, b)) return 0.0;
  const auto ca = a.corners();
  const auto cb = b.corners();
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      best = std::min(best, point_segment_distance(ca[i], cb[j], cb[(j + 1) % 4]));
      best = std::min(best, point_segment_distance(cb[i], ca[j], ca[(j + 1) % 4]));
    }
  }
  return best;
}

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const double o1 = orient(a, b, c), o2 = orient(a, b, d);
  const double o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0)))
    return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

bool point_in_polygon(Vec2 p, std::span<const Vec2> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) return false;
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = polygon[i], b = polygon[j];
    if (point_segment_distance(p, a, b) < 1e-12) return true;
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

bool polygon_is_simple(std::span<const Vec2> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = polygon[i], b = polygon[(i + 1) % n];
    if (a == b) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;  // adjacent edges share a vertex
      if (segments_intersect(a, b, polygon[j], polygon[(j + 1) % n])) return false;
    }
  }
  return true;
}

bool polygon_intersects_box(std::span<const Vec2> polygon, const OrientedBox& box) {
  const auto c = box.corners();
  for (const auto& p : c)
    if (point_in_polygon(p, polygon)) return true;
  for (const auto& p : polygon)
    if (point_in_polygon(p, c)) return true;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i)
    for (int j = 0; j < 4; ++j)
      if (segments_intersect(polygon[i], polygon[(i + 1) % n], c[j], c[(j + 1) % 4])) return true;
  return false;
}

// --- Centerline -------------------------------------------------------------

namespace {

double chord_heading(Vec2 a, Vec2 b) { return std::atan2(b.y - a.y, b.x - a.x); }

// Tangent at b of the circle through a, b, c (travel direction a -> c).
double circle_tangent(Vec2 a, Vec2 b, Vec2 c) {
  const Vec2 ab = b - a, ac = c - a;
  const double d = 2.0 * ab.cross(ac);
  const double travel = chord_heading(a, c);
  if (std::abs(d) < 1e-12 * ab.norm() * ac.norm()) return travel;
  const double ab2 = ab.dot(ab), ac2 = ac.dot(ac);
  const Vec2 center = a + Vec2{(ac.y * ab2 - ab.y * ac2) / d, (ab.x * ac2 - ac.x * ab2) / d};
  const Vec2 r = b - center;
  Vec2 t{-r.y, r.x};
  if (t.dot(unit_from_heading(travel)) < 0.0) t = t * -1.0;
  return std::atan2(t.y, t.x);
}

}  // namespace

Centerline::Centerline(std::vector<Vec2> points) : points_(std::move(points)) {
  const std::size_t n = points_.size();
  if (n < 2) throw std::invalid_argument("centerline needs at least 2 points");
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if ((points_[i + 1] - points_[i]).norm() < 1e-9)
      throw std::invalid_argument("centerline has repeated consecutive points");
  }
  std::vector<double> tangent(n);
  if (n == 2) {
    tangent[0] = tangent[1] = chord_heading(points_[0], points_[1]);
  } else {
    for (std::size_t i = 1; i + 1 < n; ++i)
      tangent[i] = circle_tangent(points_[i - 1], points_[i], points_[i + 1]);
    // Reflect about the end chords; exact for circular samples.
    tangent[0] = tangent[1] + 2.0 * wrap_angle(chord_heading(points_[0], points_[1]) - tangent[1]);
    tangent[n - 1] =
        tangent[n - 2] + 2.0 * wrap_angle(chord_heading(points_[n - 2], points_[n - 1]) - tangent[n - 2]);
  }
  cumulative_.assign(1, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double chord = (points_[i + 1] - points_[i]).norm();
    double turn = wrap_angle(tangent[i + 1] - tangent[i]);
    turn = std::clamp(turn, -0.9 * std::numbers::pi, 0.9 * std::numbers::pi);
    const double half = 0.5 * turn;
    const double len = std::abs(half) < 1e-12 ? chord : chord * half / std::sin(half);
    start_heading_.push_back(chord_heading(points_[i], points_[i + 1]) - half);
    turn_.push_back(turn);
    seg_length_.push_back(len);
    cumulative_.push_back(cumulative_.back() + len);
  }
}

FramePoint Centerline::on_segment(std::size_t seg, double offset, double lateral) const {
  const double len = seg_length_[seg];
  const double h0 = start_heading_[seg];
  const double turn = turn_[seg];
  const double u = len > 0.0 ? offset / len : 0.0;
  const double h = h0 + turn * u;
  Vec2 p = points_[seg];
  if (std::abs(turn) < 1e-12) {
    p = p + unit_from_heading(h0) * offset;
  } else {
    const double r = len / turn;
    p = p + Vec2{r * (std::sin(h) - std::sin(h0)), r * (std::cos(h0) - std::cos(h))};
  }
  const Vec2 left{-std::sin(h), std::cos(h)};
  const Vec2 q = p + left * lateral;
  return {q.x, q.y, wrap_angle(h)};
}

FramePoint Centerline::at(double arclength, double lateral) const {
  const double len = length();
  if (!(arclength >= -1e-9 && arclength <= len + 1e-9))
    throw std::out_of_range("arclength outside centerline");
  return at_extrapolated(std::clamp(arclength, 0.0, len), lateral);
}

FramePoint Centerline::at_extrapolated(double arclength, double lateral) const {
  const std::size_t nseg = seg_length_.size();
  if (arclength <= 0.0) {
    const double h = start_heading_[0];
    const Vec2 p = points_[0] + unit_from_heading(h) * arclength +
                   Vec2{-std::sin(h), std::cos(h)} * lateral;
    return {p.x, p.y, wrap_angle(h)};
  }
  if (arclength >= length()) {
    const FramePoint end = on_segment(nseg - 1, seg_length_[nseg - 1], 0.0);
    const double h = end.heading;
    const Vec2 p = Vec2{end.x, end.y} + unit_from_heading(h) * (arclength - length()) +
                   Vec2{-std::sin(h), std::cos(h)} * lateral;
    return {p.x, p.y, h};
  }
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), arclength);
  const std::size_t seg = std::min<std::size_t>(std::distance(cumulative_.begin(), it) - 1, nseg - 1);
  return on_segment(seg, arclength - cumulative_[seg], lateral);
}

double Centerline::curvature_at(double arclength) const {
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), arclength);
  const std::size_t seg =
      std::min<std::size_t>(std::max<std::ptrdiff_t>(std::distance(cumulative_.begin(), it) - 1, 0),
                            seg_length_.size() - 1);
  return turn_[seg] / seg_length_[seg];
}

Projection Centerline::project(Vec2 p) const {
  const std::size_t nseg = seg_length_.size();
  // Rank segments by chord distance, then refine the closest few on the arc.
  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(nseg);
  for (std::size_t i = 0; i < nseg; ++i)
    order.emplace_back(point_segment_distance(p, points_[i], points_[i + 1]), i);
  const std::size_t keep = std::min<std::size_t>(3, nseg);
  std::partial_sort(order.begin(), order.begin() + keep, order.end());

  Projection best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < keep; ++r) {
    const std::size_t seg = order[r].second;
    const Vec2 a = points_[seg], b = points_[seg + 1];
    const Vec2 ab = b - a;
    double offset = std::clamp((p - a).dot(ab) / ab.dot(ab), 0.0, 1.0) * seg_length_[seg];
    FramePoint q{};
    for (int iter = 0; iter < 4; ++iter) {
      q = on_segment(seg, offset, 0.0);
      offset = std::clamp(offset + (p - Vec2{q.x, q.y}).dot(unit_from_heading(q.heading)), 0.0,
                          seg_length_[seg]);
    }
    q = on_segment(seg, offset, 0.0);
    const Vec2 d = p - Vec2{q.x, q.y};
    const double dist = d.norm();
    if (dist < best_dist) {
      best_dist = dist;
      best.arclength = cumulative_[seg] + offset;
      best.heading = q.heading;
      best.lateral = unit_from_heading(q.heading).cross(d);
    }
  }
  return best;
}

}  // namespace cdrive::world
