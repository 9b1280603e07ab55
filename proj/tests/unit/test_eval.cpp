#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "cdrive/eval/analysis.hpp"
#include "cdrive/eval/metrics.hpp"
#include "cdrive/eval/report.hpp"

using namespace cdrive;
using namespace cdrive::eval;
using V = std::vector<double>;

namespace {

// Minimal squared cost over every monotone alignment, enumerated path by path.
double dtw_brute(const std::vector<double>& a, const std::vector<double>& b) {
  double best = INFINITY;
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j, double acc) {
    const double d = a[i] - b[j];
    acc += d * d;
    if (i + 1 == a.size() && j + 1 == b.size()) {
      best = std::min(best, acc);
      return;
    }
    if (i + 1 < a.size()) walk(i + 1, j, acc);
    if (j + 1 < b.size()) walk(i, j + 1, acc);
    if (i + 1 < a.size() && j + 1 < b.size()) walk(i + 1, j + 1, acc);
  };
  walk(0, 0, 0.0);
  return std::sqrt(best);
}

std::vector<std::vector<double>> all_series(int max_len, int symbols) {
  std::vector<std::vector<double>> out;
  for (int len = 1; len <= max_len; ++len) {
    int count = 1;
    for (int i = 0; i < len; ++i) count *= symbols;
    for (int c = 0; c < count; ++c) {
      std::vector<double> s(len);
      for (int i = 0, x = c; i < len; ++i, x /= symbols) s[i] = x % symbols;
      out.push_back(s);
    }
  }
  return out;
}

harness::DriveLog straight_log(int n, double dt, const std::function<double(int)>& x, double y = 0.0) {
  harness::DriveLog log;
  log.dt = dt;
  for (int i = 0; i < n; ++i) {
    harness::Tick t;
    t.tick = i;
    t.time = i * dt;
    t.ego.position = {x(i), y};
    t.ego.speed = i + 1 < n ? (x(i + 1) - x(i)) / dt : 0.0;
    log.ticks.push_back(t);
  }
  return log;
}

trajgen::Trajectory straight_reference(int n, double dt, double speed) {
  trajgen::Trajectory r;
  r.dt = dt;
  for (int i = 0; i < n; ++i) r.waypoints.push_back({speed * dt * i, 0.0, 0.0, speed});
  return r;
}

}  // namespace

TEST(Dtw, MatchesBruteForceOnSmallAlphabet) {
  const auto series = all_series(4, 3);
  for (const auto& a : series)
    for (const auto& b : series) ASSERT_EQ(dtw_distance(a, b), dtw_brute(a, b));
}

TEST(Dtw, Examples) {
  EXPECT_EQ(dtw_distance({0, 1, 2}, {0, 1, 1, 2}), 0.0);
  EXPECT_EQ(dtw_distance({0}, {3}), 3.0);
  EXPECT_EQ(dtw_distance({1.5, 2, 7}, {1.5, 2, 7}), 0.0);
  EXPECT_THROW(dtw_distance({}, {1}), std::invalid_argument);
  EXPECT_THROW(dtw_distance({1}, {}), std::invalid_argument);
}

TEST(Dtw, SymmetricAndBelowUnwarped) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 12;
    std::vector<double> a(n), b(n);
    for (int i = 0; i < n; ++i) a[i] = g(rng), b[i] = g(rng);
    double l2 = 0;
    for (int i = 0; i < n; ++i) l2 += (a[i] - b[i]) * (a[i] - b[i]);
    EXPECT_EQ(dtw_distance(a, b), dtw_distance(b, a));
    EXPECT_LE(dtw_distance(a, b), std::sqrt(l2) + 1e-12);
  }
}

TEST(FitIntercept, ExactLine) {
  const std::vector<double> p{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> v;
  for (double x : p) v.push_back(-4 * x + 3);
  const auto f = fit_intercept(p, v);
  ASSERT_TRUE(f.slope && f.r2);
  EXPECT_NEAR(*f.slope, -4.0, 1e-12);
  EXPECT_NEAR(f.intercept, 3.0, 1e-12);
  EXPECT_NEAR(*f.r2, 1.0, 1e-12);
}

TEST(FitIntercept, ConstantRegressorIsFlagged) {
  const auto f = fit_intercept({0, 0, 0, 0}, {1, 2, 4, 5});
  EXPECT_TRUE(f.constant_regressor);
  EXPECT_FALSE(f.slope);
  EXPECT_DOUBLE_EQ(f.intercept, 3.0);
  EXPECT_THROW(fit_intercept({1}, {1}), std::invalid_argument);
  EXPECT_THROW(fit_intercept({1, 2}, {1}), std::invalid_argument);
}

TEST(FitIntercept, MatchesNormalEquations) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> noise(0, 0.4);
  const int n = 300;
  std::vector<double> p(n), v(n);
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    p[i] = u(rng);
    v[i] = 2.5 - 1.7 * p[i] + noise(rng);
    X(i, 0) = p[i];
    X(i, 1) = 1.0;
    y(i) = v[i];
  }
  const Eigen::Vector2d beta = (X.transpose() * X).ldlt().solve(X.transpose() * y);
  const auto f = fit_intercept(p, v);
  EXPECT_NEAR(*f.slope, beta(0), 1e-9);
  EXPECT_NEAR(f.intercept, beta(1), 1e-9);
  double dot = 0, sum = 0;
  for (int i = 0; i < n; ++i) {
    const double e = v[i] - (*f.slope * p[i] + f.intercept);
    dot += e * p[i];
    sum += e;
  }
  EXPECT_NEAR(dot, 0.0, 1e-9);
  EXPECT_NEAR(sum, 0.0, 1e-9);
}

TEST(EffectStats, CohensDFromSummaries) {
  const auto s = effect_stats(GroupSummary{5.46, 0.89, 20}, GroupSummary{3.37, 1.63, 20});
  EXPECT_NEAR(s.cohens_d, 1.5915, 1e-4);
  EXPECT_LE(std::abs(s.cohens_d - 1.58), 0.02);
  EXPECT_FALSE(s.mann_whitney_u);
}

TEST(EffectStats, MannWhitneyMatchesPairCounting) {
  auto pairs = [](const std::vector<double>& a, const std::vector<double>& b) {
    double u = 0;
    for (double x : a)
      for (double y : b) u += x > y ? 1.0 : x == y ? 0.5 : 0.0;
    return u;
  };
  EXPECT_EQ(*effect_stats(V{1, 2, 3}, V{4, 5, 6}).mann_whitney_u, 0.0);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> d(0, 5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(2 + trial % 7), b(2 + trial % 5);
    for (auto& x : a) x = d(rng);
    for (auto& x : b) x = d(rng);
    EXPECT_DOUBLE_EQ(*effect_stats(a, b).mann_whitney_u, pairs(a, b));
  }
}

TEST(EffectStats, ReferenceValues) {
  // Reference values from an independent statistics package.
  const auto s = effect_stats(V{1, 2, 3, 4}, V{2, 3, 4, 5});
  EXPECT_NEAR(s.welch_t, -1.0954451150103324, 1e-12);
  EXPECT_NEAR(s.welch_df, 6.0, 1e-12);
  EXPECT_NEAR(s.p_t, 0.3153335962012296, 1e-9);
  const auto w = effect_stats(V{1.5, 2.1, 3.3, 4.0, 6.2}, V{2.2, 3.9, 4.4, 5.1});
  EXPECT_NEAR(w.welch_t, -0.46686363629441735, 1e-12);
  EXPECT_NEAR(w.welch_df, 6.87211102339763, 1e-9);
  EXPECT_NEAR(w.p_t, 0.6550366140368744, 1e-9);
  const auto m = effect_stats(V{1.5, 2.1, 3.3, 4.0, 6.2, 2.2}, V{2.2, 3.9, 4.4, 5.1});
  EXPECT_EQ(*m.mann_whitney_u, 7.5);
  EXPECT_NEAR(*m.p_u, 0.3923303397765645, 1e-9);
}

TEST(EffectStats, SwapNegatesAndIdenticalIsNull) {
  const std::vector<double> a{1.2, 3.4, 2.2, 5.0}, b{0.3, 0.9, 2.5};
  const auto ab = effect_stats(a, b), ba = effect_stats(b, a);
  EXPECT_EQ(ab.cohens_d, -ba.cohens_d);
  EXPECT_EQ(ab.welch_t, -ba.welch_t);
  EXPECT_EQ(ab.p_t, ba.p_t);
  EXPECT_EQ(*ab.p_u, *ba.p_u);
  const auto same = effect_stats(a, a);
  EXPECT_EQ(same.cohens_d, 0.0);
  EXPECT_NEAR(same.p_t, 1.0, 1e-12);
  EXPECT_FALSE(same.degenerate);
}

TEST(EffectStats, DegenerateAndInvalid) {
  EXPECT_TRUE(effect_stats(V{2, 2, 2}, V{3, 3}).degenerate);
  EXPECT_TRUE(effect_stats(V{2, 2}, V{2, 2}).degenerate);
  EXPECT_EQ(effect_stats(V{2, 2}, V{2, 2}).cohens_d, 0.0);
  EXPECT_THROW(effect_stats(V{1}, V{1, 2}), std::invalid_argument);
}

TEST(ConceptMetrics, ConfusionArithmetic) {
  const auto s = binary_stats({1, 1, 1, 1});
  EXPECT_DOUBLE_EQ(s.accuracy, 0.5);
  EXPECT_DOUBLE_EQ(s.precision, 0.5);
  EXPECT_DOUBLE_EQ(s.recall, 0.5);
  EXPECT_DOUBLE_EQ(s.f1, 0.5);
  const auto none = binary_stats({0, 0, 3, 5});
  EXPECT_EQ(none.f1, 0.0);
  EXPECT_EQ(none.precision, 0.0);
}

TEST(ConceptMetrics, AlwaysPositiveAndPerfect) {
  std::vector<std::vector<double>> pred, truth;
  for (int i = 0; i < 8; ++i) {
    pred.push_back({1.0, i < 2 ? 0.9 : 0.1});
    truth.push_back({i < 2 ? 1.0 : 0.0, i < 2 ? 1.0 : 0.0});
  }
  const auto r = concept_metrics(pred, truth, {"ALWAYS", "PERFECT"});
  EXPECT_DOUBLE_EQ(r.at("ALWAYS").precision, 0.25);
  EXPECT_DOUBLE_EQ(r.at("ALWAYS").recall, 1.0);
  EXPECT_DOUBLE_EQ(r.at("ALWAYS").f1, 0.4);
  const auto& p = r.at("PERFECT");
  EXPECT_EQ(p.accuracy, 1.0);
  EXPECT_EQ(p.precision, 1.0);
  EXPECT_EQ(p.recall, 1.0);
  EXPECT_EQ(p.f1, 1.0);

  std::reverse(pred.begin(), pred.end());
  std::reverse(truth.begin(), truth.end());
  const auto again = concept_metrics(pred, truth, {"ALWAYS", "PERFECT"});
  EXPECT_EQ(again.at("ALWAYS").f1, r.at("ALWAYS").f1);
}

TEST(ConceptMetrics, RejectsBadInput) {
  EXPECT_THROW(concept_metrics({}, {}, {"A"}), std::invalid_argument);
  EXPECT_THROW(concept_metrics({{1.0}}, {{1.0, 0.0}}, {"A"}), std::invalid_argument);
  EXPECT_THROW(ranker_agreement({}, {}), std::invalid_argument);
  EXPECT_DOUBLE_EQ(ranker_agreement({1, 2, 3, 4}, {1, 0, 3, 0}), 0.5);
}

TEST(DrivingMetrics, IdenticalOffsetAndHalfway) {
  const double dt = 0.5, v = 2.0;
  const auto ref = straight_reference(40, dt, v);
  const auto same = driving_metrics(straight_log(20, dt, [&](int i) { return v * dt * i; }), ref);
  EXPECT_NEAR(same.avg_l2, 0.0, 1e-12);
  EXPECT_NEAR(same.progress, 1.0, 1e-12);
  EXPECT_EQ(same.collision_rate, 0.0);

  const auto offset = driving_metrics(straight_log(20, dt, [&](int i) { return v * dt * i; }, 1.0), ref);
  EXPECT_NEAR(offset.avg_l2, 1.0, 1e-12);

  // Reference covers 19 m over 20 ticks; ego halts at 9.5 m.
  const auto half = driving_metrics(straight_log(20, dt, [&](int i) { return std::min(v * dt * i, 9.5); }), ref);
  EXPECT_NEAR(half.progress, 0.5, 1e-12);
}

TEST(DrivingMetrics, HorizonL2FromPlans) {
  const double dt = 0.5, v = 2.0;
  const auto ref = straight_reference(60, dt, v);
  auto log = straight_log(20, dt, [&](int i) { return v * dt * i; });
  for (auto& t : log.ticks) {
    t.plan.dt = 0.5;
    for (int k = 0; k <= 20; ++k) t.plan.waypoints.push_back({t.ego.position.x + v * 0.5 * k, 2.0, 0.0, v});
  }
  const auto r = driving_metrics(log, ref);
  for (int h : kL2Horizons) {
    ASSERT_TRUE(r.l2_at.count(h));
    EXPECT_NEAR(r.l2_at.at(h), 2.0, 1e-12);
  }
}

TEST(DrivingMetrics, RejectsMisalignment) {
  auto log = straight_log(10, 0.5, [](int i) { return double(i); });
  EXPECT_THROW(driving_metrics(log, straight_reference(10, 0.1, 1.0)), std::invalid_argument);
  EXPECT_THROW(driving_metrics(log, straight_reference(5, 0.5, 1.0)), std::invalid_argument);
  log.ticks[3].time += 0.2;
  EXPECT_THROW(driving_metrics(log, straight_reference(10, 0.5, 1.0)), std::invalid_argument);
}

TEST(DrivingMetrics, CollisionAndAggregate) {
  auto log = straight_log(10, 0.5, [](int i) { return double(i); });
  log.ticks[4].collision = true;
  const auto ref = straight_reference(10, 0.5, 2.0);
  EXPECT_EQ(driving_metrics(log, ref).collision_rate, 0.0);  // not at fault
  log.ticks[4].at_fault = true;
  const auto hit = driving_metrics(log, ref);
  EXPECT_EQ(hit.collision_rate, 1.0);
  auto clean = hit;
  clean.collision_rate = 0.0;
  const auto agg = aggregate({hit, clean, clean, clean});
  EXPECT_DOUBLE_EQ(agg.collision_rate, 0.25);
  EXPECT_EQ(agg.runs, 4);
  EXPECT_NEAR(relative_difference(1.05, 1.0), 0.05, 1e-12);
  EXPECT_EQ(relative_difference(0.0, 0.0), 0.0);
}

TEST(DrivingMetrics, StartDelay) {
  // Reference pulls away at tick 2, ego at tick 5.
  trajgen::Trajectory ref;
  ref.dt = 0.5;
  for (int i = 0; i < 12; ++i) ref.waypoints.push_back({0, 0, 0, i >= 2 ? 1.0 : 0.0});
  auto log = straight_log(12, 0.5, [](int) { return 0.0; });
  for (int i = 0; i < 12; ++i) log.ticks[i].ego.speed = i >= 5 ? 1.0 : 0.0;
  const auto r = driving_metrics(log, ref);
  ASSERT_TRUE(r.start_delay);
  EXPECT_DOUBLE_EQ(*r.start_delay, 1.5);
  EXPECT_FALSE(r.decel_time_diff);
}

TEST(Distribution, ManualOnlyIsEmptyAndConstantFillsOneBin) {
  auto log = straight_log(10, 0.5, [](int i) { return double(i); });
  log.concept_names = {"A", "B"};
  for (auto& t : log.ticks) {
    t.mode = harness::AutonomyMode::manual;
    t.activations = {0.7, 0.2};
  }
  auto auto_log = log;
  for (auto& t : auto_log.ticks) t.mode = harness::AutonomyMode::self_driving;
  const auto r = distribution_report(log, auto_log, {"A"});
  EXPECT_TRUE(r.empty);
  EXPECT_TRUE(r.a.empty());
  EXPECT_EQ(r.b.ticks, 10);
  const auto& counts = r.b.concepts[0].counts;
  EXPECT_EQ(std::count_if(counts.begin(), counts.end(), [](long c) { return c > 0; }), 1);
  EXPECT_NEAR(r.b.concepts[0].mean, 0.7, 1e-12);
  EXPECT_THROW(distribution_report(log, auto_log, {"MISSING"}), std::invalid_argument);
}

TEST(DriveLog, RoundTripIsByteExact) {
  auto log = straight_log(6, 0.5, [](int i) { return 0.1 * i * i; });
  log.scenario = "fixture";
  log.planner_mode = "cwnet_causal";
  log.seed = 99;
  log.concept_schema = "dataset1";
  log.concept_names = {"A", "B"};
  log.ticks[1].mode = harness::AutonomyMode::manual;
  log.ticks[2].chosen_index = 17;
  log.ticks[2].rewards = harness::RewardSummary{1.0 / 3, 2.5, -1.25, 0.1};
  log.ticks[2].plan.waypoints = {{0.1, 0.2, 0.3, 0.4}, {1e-17, -2, 3.14159, 5}};
  log.ticks[2].activations = {0.873, 1e-9};
  log.ticks[2].percentages = {87, 0};
  log.ticks[2].explanation = "I chose to \"stop\"";
  log.ticks[3].commands = {"{\"kind\":\"disengage\"}"};
  log.ticks[4].collision = true;
  log.ticks[4].collided_with = "cyc";
  const auto text = harness::format_drive_log(log);
  std::istringstream in(text);
  const auto back = harness::read_drive_log(in);
  EXPECT_EQ(harness::format_drive_log(back), text);
  EXPECT_EQ(back.ticks[2].activations[0], 0.873);
  EXPECT_EQ(back.ticks[1].mode, harness::AutonomyMode::manual);
  std::istringstream bad("{\"kind\":\"other\"}\n");
  EXPECT_THROW(harness::read_drive_log(bad), std::runtime_error);
}

TEST(Reports, CsvAndRolling) {
  auto log = straight_log(3, 0.5, [](int i) { return double(i); });
  log.concept_names = {"A"};
  log.ticks[1].activations = {0.25};
  std::ostringstream out;
  write_timeseries_csv(out, log);
  EXPECT_EQ(out.str(),
            "time,tick,mode,speed,backstop,A\n0.000,0,self_driving,2.0000,0,\n"
            "0.500,1,self_driving,2.0000,0,0.250000\n1.000,2,self_driving,0.0000,0,\n");
  const auto r = rolling_mean({1, 2, NAN, 4}, 2);
  EXPECT_DOUBLE_EQ(r[0], 1.0);
  EXPECT_DOUBLE_EQ(r[1], 1.5);
  EXPECT_DOUBLE_EQ(r[2], 2.0);
  EXPECT_DOUBLE_EQ(r[3], 4.0);
  EXPECT_NO_THROW(to_json(aggregate({driving_metrics(log, straight_reference(3, 0.5, 2.0))})).dump());
}
