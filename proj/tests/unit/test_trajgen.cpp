#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "cdrive/trajgen/trajgen.hpp"

using namespace cdrive;
using namespace cdrive::trajgen;

namespace {

// Generic 6x6 boundary system solved with a dense LU as the oracle.
Eigen::VectorXd solve_boundary_system(const QuinticBC& bc) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(6, 6);
  Eigen::VectorXd b(6);
  const double T = bc.T;
  for (int i = 0; i < 6; ++i) {
    A(0, i) = i == 0 ? 1 : 0;
    A(1, i) = i == 1 ? 1 : 0;
    A(2, i) = i == 2 ? 2 : 0;
    A(3, i) = std::pow(T, i);
    A(4, i) = i >= 1 ? i * std::pow(T, i - 1) : 0;
    A(5, i) = i >= 2 ? i * (i - 1) * std::pow(T, i - 2) : 0;
  }
  b << bc.p0, bc.v0, bc.a0, bc.pT, bc.vT, bc.aT;
  return A.partialPivLu().solve(b);
}

world::SceneContext scene_on_straight(double speed, double y = 0.0) {
  world::Scenario sc;
  sc.map.push_back(world::Lane{"L", {{-10, 0}, {300, 0}}, 3.5});
  sc.route_lanes = {"L"};
  sc.ego.speed = speed;
  sc.ego.position = {0, y};
  world::World w(sc);
  return world::build_scene(w);
}

double integrated_sq_jerk(const std::function<double(double)>& jerk, double T) {
  const int n = 20000;
  double acc = 0;
  for (int i = 0; i < n; ++i) {
    const double t = (i + 0.5) * T / n;
    acc += jerk(t) * jerk(t);
  }
  return acc * T / n;
}

}  // namespace

TEST(Quintic, ZeroBoundary) {
  const auto c = quintic_coeffs({0, 0, 0, 0, 0, 0, 2.0});
  for (double x : c) EXPECT_EQ(x, 0.0);
}

TEST(Quintic, ConstantVelocityLine) {
  const double T = 3.0;
  const auto c = quintic_coeffs({0, 1, 0, T, 1, 0, T});
  const double want[6] = {0, 1, 0, 0, 0, 0};
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(c[i], want[i], 1e-12);
}

TEST(Quintic, RestToRestMatchesLinearSystem) {
  const QuinticBC bc{0, 0, 0, 1, 0, 0, 1.0};
  const auto c = quintic_coeffs(bc);
  const auto oracle = solve_boundary_system(bc);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(c[i], oracle(i), 1e-12);
  EXPECT_NEAR(c[3], 10, 1e-12);
  EXPECT_NEAR(c[4], -15, 1e-12);
  EXPECT_NEAR(c[5], 6, 1e-12);
}

TEST(Quintic, BoundaryResiduals) {
  for (const QuinticBC bc : {QuinticBC{1, 2, 0.5, 20, 0, 0, 4.0}, QuinticBC{-3, 0, 0, 4, 3, -1, 0.7},
                             QuinticBC{0, 6, 0, 0, 0, 0, 10.0}}) {
    const auto c = quintic_coeffs(bc);
    const auto oracle = solve_boundary_system(bc);
    for (int i = 0; i < 6; ++i) EXPECT_NEAR(c[i], oracle(i), 1e-9 * (1 + std::abs(oracle(i))));
    EXPECT_NEAR(quintic_eval(c, 0), bc.p0, 1e-9);
    EXPECT_NEAR(quintic_eval(c, 0, 1), bc.v0, 1e-9);
    EXPECT_NEAR(quintic_eval(c, 0, 2), bc.a0, 1e-9);
    EXPECT_NEAR(quintic_eval(c, bc.T), bc.pT, 1e-9);
    EXPECT_NEAR(quintic_eval(c, bc.T, 1), bc.vT, 1e-9);
    EXPECT_NEAR(quintic_eval(c, bc.T, 2), bc.aT, 1e-9);
  }
}

TEST(Quintic, RejectsBadHorizon) {
  EXPECT_THROW(quintic_coeffs({0, 0, 0, 1, 0, 0, 0.0}), std::invalid_argument);
  EXPECT_THROW(quintic_coeffs({0, 0, 0, 1, 0, 0, -1.0}), std::invalid_argument);
  EXPECT_THROW(quintic_coeffs({0, 0, 0, 1, 0, 0, 5e-4}), std::invalid_argument);
}

TEST(Quintic, JerkNoWorseThanSepticInterpolants) {
  const double T = 2.0, D = 3.0;
  const auto c = quintic_coeffs({0, 0, 0, D, 0, 0, T});
  const double jq = integrated_sq_jerk([&](double t) { return quintic_eval(c, t, 3); }, T);
  // Septics meeting the same position, velocity and acceleration endpoints:
  // quintic + t^3 (T - t)^3 (alpha + beta t).
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double alpha = u(rng), beta = u(rng);
    auto jerk = [&](double t) {
      // third derivative of q(t) = t^3 (T - t)^3 (alpha + beta t), expanded by
      // central differences of the closed form at a fine step
      auto q = [&](double x) { return x * x * x * std::pow(T - x, 3) * (alpha + beta * x); };
      const double h = 1e-3;
      const double q3 = (q(t + 2 * h) - 2 * q(t + h) + 2 * q(t - h) - q(t - 2 * h)) / (2 * h * h * h);
      return quintic_eval(c, t, 3) + q3;
    };
    EXPECT_LE(jq, integrated_sq_jerk(jerk, T) + 1e-9);
  }
  // the septic with zero end jerk, p = D (35u^4 - 84u^5 + 70u^6 - 20u^7)
  const double js = integrated_sq_jerk(
      [&](double t) {
        const double x = t / T;
        return D / (T * T * T) * (35 * 24 * x - 84 * 60 * x * x + 70 * 120 * x * x * x - 20 * 210 * x * x * x * x);
      },
      T);
  EXPECT_LE(jq, js);
}

TEST(RouteFrame, StraightRoute) {
  world::Route r;
  r.centerline = world::Centerline({{0, 0}, {10, 0}});
  auto p = sample_route_frame(r, 5, 0);
  EXPECT_NEAR(p.x, 5, 1e-12);
  EXPECT_NEAR(p.y, 0, 1e-12);
  EXPECT_NEAR(p.heading, 0, 1e-12);
  p = sample_route_frame(r, 5, 1);
  EXPECT_NEAR(p.y, 1, 1e-12);
  EXPECT_THROW(sample_route_frame(r, 11, 0), std::out_of_range);
}

TEST(RouteFrame, QuarterCircle) {
  std::vector<world::Vec2> pts;
  for (int i = 0; i <= 12; ++i) {
    const double a = std::numbers::pi / 2 * i / 12;
    pts.push_back({10 * std::sin(a), 10 - 10 * std::cos(a)});
  }
  world::Route r;
  r.centerline = world::Centerline(pts);
  EXPECT_NEAR(sample_route_frame(r, 5 * std::numbers::pi, 0).heading, std::numbers::pi / 2, 1e-6);
}

TEST(Candidates, DefaultCounts) {
  const auto set = generate_candidates(scene_on_straight(3.0));
  EXPECT_EQ(set.size(), 146u);
  int heuristic = 0, proposal = 0;
  for (auto t : set.tags) (t == GeneratorTag::heuristic_grid ? heuristic : proposal)++;
  EXPECT_EQ(heuristic, 143);
  EXPECT_EQ(proposal, 3);
  for (const auto& c : set.candidates) {
    EXPECT_EQ(c.waypoints.size(), 21u);
    EXPECT_DOUBLE_EQ(c.horizon(), 10.0);
    EXPECT_NO_THROW(c.validate());
  }
}

TEST(Candidates, BoundaryFidelity) {
  auto scene = scene_on_straight(3.0, 0.4);
  scene.ego.heading = 0.05;
  const auto set = generate_candidates(scene);
  for (const auto& c : set.candidates) {
    const auto& w = c.waypoints.front();
    EXPECT_NEAR(w.x, scene.ego.position.x, 1e-6);
    EXPECT_NEAR(w.y, scene.ego.position.y, 1e-6);
    EXPECT_NEAR(w.speed, scene.ego.speed, 1e-6);
    EXPECT_NEAR(w.heading, scene.ego.heading, 1e-6);
  }
}

TEST(Candidates, StationaryHasAllStop) {
  const auto scene = scene_on_straight(0.0);
  const auto set = generate_candidates(scene);
  bool found = false;
  for (const auto& c : set.candidates) {
    bool all_stop = true;
    for (const auto& w : c.waypoints)
      all_stop = all_stop && w.speed == 0.0 && std::abs(w.x - scene.ego.position.x) < 1e-9 &&
                 std::abs(w.y - scene.ego.position.y) < 1e-9;
    found = found || all_stop;
  }
  EXPECT_TRUE(found);
}

TEST(Candidates, NoDuplicatesWhileMoving) {
  const auto set = generate_candidates(scene_on_straight(2.5));
  std::set<std::vector<double>> seen;
  for (std::size_t i = 0; i < 143; ++i) {
    std::vector<double> key;
    for (const auto& w : set.candidates[i].waypoints) {
      key.push_back(w.x);
      key.push_back(w.y);
      key.push_back(w.speed);
    }
    EXPECT_TRUE(seen.insert(key).second) << "duplicate candidate " << i;
  }
}

TEST(Candidates, OffRoute) {
  EXPECT_THROW(generate_candidates(scene_on_straight(1.0, 12.0)), NoRouteAnchor);
  try {
    generate_candidates(scene_on_straight(1.0, 12.0));
  } catch (const std::exception& e) {
    EXPECT_STREQ(e.what(), "no route anchor");
  }
}

TEST(Trajectory, AverageL2) {
  Trajectory a, b;
  for (int i = 0; i < 5; ++i) {
    a.waypoints.push_back({double(i), 0, 0, 1});
    b.waypoints.push_back({double(i), 1, 0, 1});
  }
  EXPECT_DOUBLE_EQ(average_l2(a, b), 1.0);
  EXPECT_DOUBLE_EQ(average_l2(a, a), 0.0);
}
