#include "cdrive/trajgen/trajgen.hpp"

#include <algorithm>
#include <cmath>

namespace cdrive::trajgen {

void Trajectory::validate() const {
  if (dt <= 0.0) throw std::invalid_argument("trajectory dt must be positive");
  for (const auto& w : waypoints) {
    if (!std::isfinite(w.x) || !std::isfinite(w.y) || !std::isfinite(w.heading) || !std::isfinite(w.speed))
      throw std::invalid_argument("trajectory has non-finite waypoint");
    if (w.speed < 0.0) throw std::invalid_argument("trajectory has negative speed");
  }
}

double average_l2(const Trajectory& a, const Trajectory& b) {
  const std::size_t n = std::min(a.waypoints.size(), b.waypoints.size());
  if (n == 0) throw std::invalid_argument("average_l2 on empty trajectory");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    sum += std::hypot(a.waypoints[i].x - b.waypoints[i].x, a.waypoints[i].y - b.waypoints[i].y);
  return sum / static_cast<double>(n);
}

QuinticCoeffs quintic_coeffs(const QuinticBC& bc) {
  const double T = bc.T;
  if (!(T > 0.0)) throw std::invalid_argument("quintic horizon must be positive");
  if (T < 1e-3) throw std::invalid_argument("quintic horizon is ill-conditioned (< 1e-3 s)");
  const double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T;
  const double dp = bc.pT - (bc.p0 + bc.v0 * T + 0.5 * bc.a0 * T2);
  const double dv = bc.vT - (bc.v0 + bc.a0 * T);
  const double da = bc.aT - bc.a0;
  return {bc.p0,
          bc.v0,
          0.5 * bc.a0,
          (20.0 * dp - 8.0 * dv * T + da * T2) / (2.0 * T3),
          (-30.0 * dp + 14.0 * dv * T - 2.0 * da * T2) / (2.0 * T4),
          (12.0 * dp - 6.0 * dv * T + da * T2) / (2.0 * T5)};
}

double quintic_eval(const QuinticCoeffs& c, double t, int derivative) {
  switch (derivative) {
    case 0: return c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))));
    case 1: return c[1] + t * (2 * c[2] + t * (3 * c[3] + t * (4 * c[4] + t * 5 * c[5])));
    case 2: return 2 * c[2] + t * (6 * c[3] + t * (12 * c[4] + t * 20 * c[5]));
    case 3: return 6 * c[3] + t * (24 * c[4] + t * 60 * c[5]);
    default: throw std::invalid_argument("quintic derivative order must be 0..3");
  }
}

world::FramePoint sample_route_frame(const world::Route& route, double arclength, double lateral) {
  return route.centerline.at(arclength, lateral);
}

namespace {

// Longitudinal progress: quintic speed change over a maneuver window, then
// constant speed.
struct Longitudinal {
  QuinticCoeffs c{};
  double window = 0.0;
  double v_end = 0.0;
  double p_end = 0.0;

  static Longitudinal make(double v0, double vT, const TrajGenParams& p) {
    Longitudinal l;
    l.window = std::clamp(1.5 * std::abs(vT - v0) / p.longitudinal_accel, p.min_transition_time, p.horizon);
    l.v_end = vT;
    l.p_end = 0.5 * (v0 + vT) * l.window;
    l.c = quintic_coeffs({0.0, v0, 0.0, l.p_end, vT, 0.0, l.window});
    return l;
  }
  double position(double t) const {
    return t <= window ? quintic_eval(c, t) : p_end + v_end * (t - window);
  }
  double speed(double t) const { return t <= window ? quintic_eval(c, t, 1) : v_end; }
};

// Lateral offset as a quintic in traveled arclength.
struct Lateral {
  QuinticCoeffs c{};
  double length = 1.0;
  double target = 0.0;

  double offset(double ds) const { return ds >= length ? target : quintic_eval(c, ds); }
  double slope(double ds) const { return ds >= length ? 0.0 : quintic_eval(c, ds, 1); }
};

struct Anchor {
  double s0 = 0.0;
  double l0 = 0.0;
  double slope0 = 0.0;
  double v_along = 0.0;
  world::Vec2 correction;
};

template <class SpeedFn, class PosFn>
Trajectory sample(const world::Route& route, const Anchor& a, const Lateral& lat, double ego_heading,
                  double ego_speed, const TrajGenParams& p, PosFn position, SpeedFn speed) {
  const int n = static_cast<int>(std::lround(p.horizon / p.dt));
  Trajectory tr;
  tr.dt = p.dt;
  tr.waypoints.reserve(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double t = k * p.dt;
    const double ds = std::max(0.0, position(t));
    const double l = lat.offset(ds);
    const double slope = lat.slope(ds);
    const world::FramePoint fp = route.centerline.at_extrapolated(a.s0 + ds, l);
    const double fade = std::max(0.0, 1.0 - ds / lat.length);
    Waypoint w;
    w.x = fp.x + a.correction.x * fade;
    w.y = fp.y + a.correction.y * fade;
    w.heading = world::wrap_angle(fp.heading + std::atan(slope));
    w.speed = std::max(0.0, speed(t)) * std::sqrt(1.0 + slope * slope);
    if (k == 0) {
      w.heading = ego_heading;
      w.speed = ego_speed;
    }
    tr.waypoints.push_back(w);
  }
  return tr;
}

}  // namespace

CandidateSet generate_candidates(const world::SceneContext& scene, const TrajGenParams& p) {
  if (!scene.route) throw std::invalid_argument("scene has no route");
  const world::Route& route = *scene.route;
  const world::EgoState& ego = scene.ego;
  const world::Projection proj = route.centerline.project(ego.position);
  const world::FramePoint on_route = route.centerline.at_extrapolated(proj.arclength, proj.lateral);
  const world::Vec2 correction = ego.position - world::Vec2{on_route.x, on_route.y};
  if (std::abs(proj.lateral) > p.max_anchor_distance || correction.norm() > p.max_anchor_distance)
    throw NoRouteAnchor();

  const double rel = std::clamp(world::wrap_angle(ego.heading - proj.heading), -1.0, 1.0);
  Anchor a{proj.arclength, proj.lateral, std::tan(rel), ego.speed * std::cos(rel), correction};

  auto make_lateral = [&](double target) {
    Lateral lat;
    lat.length = p.lateral_transition;
    lat.target = target;
    lat.c = quintic_coeffs({a.l0, a.slope0, 0.0, target, 0.0, 0.0, lat.length});
    return lat;
  };

  CandidateSet set;
  const int total = p.total_count();
  set.candidates.reserve(total);
  for (int si = 0; si < p.speed_samples; ++si) {
    const double vT = p.speed_samples > 1 ? p.speed_limit * si / (p.speed_samples - 1) : p.speed_limit;
    const Longitudinal lon = Longitudinal::make(a.v_along, vT, p);
    for (int li = 0; li < p.lateral_samples; ++li) {
      const double off =
          p.lateral_samples > 1 ? -p.lateral_span + 2.0 * p.lateral_span * li / (p.lateral_samples - 1) : 0.0;
      const Lateral lat = make_lateral(off);
      set.candidates.push_back(sample(
          route, a, lat, ego.heading, ego.speed, p, [&](double t) { return lon.position(t); },
          [&](double t) { return lon.speed(t); }));
      set.tags.push_back(GeneratorTag::heuristic_grid);
      set.target_speeds.push_back(vT);
      set.target_offsets.push_back(off);
    }
  }

  if (p.proposals) {
    const Lateral keep = make_lateral(a.l0);
    const double v0 = a.v_along;
    const double vmax = std::max(p.speed_limit, v0);
    // constant velocity
    set.candidates.push_back(sample(
        route, a, keep, ego.heading, ego.speed, p, [&](double t) { return v0 * t; },
        [&](double) { return v0; }));
    set.target_speeds.push_back(v0);
    // constant acceleration, capped at the speed limit
    const double ta = (vmax - v0) / p.proposal_accel;
    set.candidates.push_back(sample(
        route, a, keep, ego.heading, ego.speed, p,
        [&](double t) {
          return t <= ta ? v0 * t + 0.5 * p.proposal_accel * t * t
                         : v0 * ta + 0.5 * p.proposal_accel * ta * ta + vmax * (t - ta);
        },
        [&](double t) { return std::min(vmax, v0 + p.proposal_accel * t); }));
    set.target_speeds.push_back(vmax);
    // constant deceleration to a stop
    const double td = v0 / p.proposal_decel;
    set.candidates.push_back(sample(
        route, a, keep, ego.heading, ego.speed, p,
        [&](double t) {
          const double tt = std::min(t, td);
          return v0 * tt - 0.5 * p.proposal_decel * tt * tt;
        },
        [&](double t) { return std::max(0.0, v0 - p.proposal_decel * t); }));
    set.target_speeds.push_back(0.0);
    for (int i = 0; i < 3; ++i) {
      set.tags.push_back(GeneratorTag::proposal);
      set.target_offsets.push_back(a.l0);
    }
  }
  return set;
}

}  // namespace cdrive::trajgen
