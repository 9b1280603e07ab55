#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cdrive/world/geometry.hpp"

using namespace cdrive::world;

TEST(Geometry, WrapAngle) {
  EXPECT_NEAR(wrap_angle(3 * std::numbers::pi), std::numbers::pi, 1e-12);
  EXPECT_NEAR(wrap_angle(-std::numbers::pi / 2), -std::numbers::pi / 2, 1e-12);
  EXPECT_NEAR(wrap_angle(2 * std::numbers::pi + 0.1), 0.1, 1e-12);
}

TEST(Geometry, BoxOverlapAndDistance) {
  OrientedBox a{{0, 0}, 0.0, 4.0, 2.0};
  OrientedBox b{{5, 0}, 0.0, 4.0, 2.0};
  EXPECT_FALSE(boxes_overlap(a, b));
  EXPECT_NEAR(box_distance(a, b), 1.0, 1e-12);
  b.center = {3.9, 0.5};
  EXPECT_TRUE(boxes_overlap(a, b));
  EXPECT_EQ(box_distance(a, b), 0.0);
  OrientedBox rotated{{0, 3.5}, std::numbers::pi / 2, 2.0, 1.0};
  EXPECT_NEAR(box_distance(a, rotated), 1.5, 1e-12);
}

TEST(Geometry, PolygonTests) {
  std::vector<Vec2> square{{0, 0}, {2, 0}, {2, 2}, {0, 2}};
  EXPECT_TRUE(point_in_polygon({1, 1}, square));
  EXPECT_TRUE(point_in_polygon({2, 1}, square));
  EXPECT_FALSE(point_in_polygon({3, 1}, square));
  EXPECT_TRUE(polygon_is_simple(square));
  std::vector<Vec2> bowtie{{0, 0}, {2, 2}, {2, 0}, {0, 2}};
  EXPECT_FALSE(polygon_is_simple(bowtie));
  EXPECT_TRUE(polygon_intersects_box(square, {{2.5, 1}, 0.0, 2.0, 1.0}));
  EXPECT_FALSE(polygon_intersects_box(square, {{5, 1}, 0.0, 2.0, 1.0}));
  // box fully containing the polygon
  EXPECT_TRUE(polygon_intersects_box(square, {{1, 1}, 0.0, 10.0, 10.0}));
}

TEST(Centerline, StraightLineFrame) {
  Centerline c({{0, 0}, {10, 0}, {20, 0}});
  EXPECT_DOUBLE_EQ(c.length(), 20.0);
  auto p = c.at(5, 0);
  EXPECT_NEAR(p.x, 5, 1e-12);
  EXPECT_NEAR(p.y, 0, 1e-12);
  EXPECT_NEAR(p.heading, 0, 1e-12);
  p = c.at(5, 1);
  EXPECT_NEAR(p.x, 5, 1e-12);
  EXPECT_NEAR(p.y, 1, 1e-12);
  EXPECT_THROW(c.at(-0.1, 0), std::out_of_range);
  EXPECT_THROW(c.at(20.1, 0), std::out_of_range);
  auto e = c.at_extrapolated(25, -1);
  EXPECT_NEAR(e.x, 25, 1e-12);
  EXPECT_NEAR(e.y, -1, 1e-12);
}

TEST(Centerline, QuarterCircleHeading) {
  // Samples of a radius-10 quarter circle centred at (0, 10), starting at the
  // origin heading +x.
  const double r = 10.0;
  std::vector<Vec2> pts;
  const int n = 16;
  for (int i = 0; i <= n; ++i) {
    const double a = (std::numbers::pi / 2) * i / n;
    pts.push_back({r * std::sin(a), r - r * std::cos(a)});
  }
  Centerline c(pts);
  EXPECT_NEAR(c.length(), r * std::numbers::pi / 2, 1e-9);
  const auto end = c.at(5 * std::numbers::pi, 0);
  EXPECT_NEAR(end.heading, std::numbers::pi / 2, 1e-6);
  // analytic point at arclength s: angle s / r
  for (double s : {1.0, 3.3, 7.7, 12.0}) {
    const auto p = c.at(s, 0.5);
    const double a = s / r;
    EXPECT_NEAR(p.heading, a, 1e-9);
    EXPECT_NEAR(p.x, (r - 0.5) * std::sin(a), 1e-9);
    EXPECT_NEAR(p.y, r - (r - 0.5) * std::cos(a), 1e-9);
    EXPECT_NEAR(c.curvature_at(s), 1.0 / r, 1e-9);
  }
}

TEST(Centerline, ProjectionRoundTrip) {
  std::vector<Vec2> pts;
  for (int i = 0; i <= 20; ++i) pts.push_back({i * 2.0, 3.0 * std::sin(i * 0.2)});
  Centerline c(pts);
  for (double s : {0.5, 7.0, 19.3, 33.0}) {
    for (double l : {-1.5, 0.0, 1.2}) {
      const auto p = c.at(s, l);
      const auto proj = c.project({p.x, p.y});
      EXPECT_NEAR(proj.arclength, s, 1e-6);
      EXPECT_NEAR(proj.lateral, l, 1e-6);
    }
  }
}
