#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "cdrive/harness/drive_log.hpp"

namespace cdrive::eval {

struct InterceptFit {
  std::optional<double> slope;  // absent for a constant regressor
  double intercept = 0.0;
  std::optional<double> r2;     // absent for a constant regressor
  bool constant_regressor = false;
  int n = 0;
};

/// Ordinary least squares speed = slope * p + intercept. Needs at least 2
/// points; a constant regressor yields intercept = mean(speed).
InterceptFit fit_intercept(const std::vector<double>& p, const std::vector<double>& speed);

/// Dynamic time warping with steps (1,0), (0,1), (1,1): square root of the
/// minimal summed squared difference. Throws on empty series.
double dtw_distance(const std::vector<double>& a, const std::vector<double>& b);

struct GroupSummary {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation
  int n = 0;
};

/// Throws std::invalid_argument with fewer than 2 samples.
GroupSummary summarize(const std::vector<double>& samples);

struct EffectStats {
  double welch_t = 0.0;
  double welch_df = 0.0;
  double p_t = 1.0;       // two-sided
  std::optional<double> mann_whitney_u;  // pairs with A above B, ties count 1/2
  std::optional<double> p_u;             // two-sided, normal approximation
  double cohens_d = 0.0;  // (mA - mB) / sqrt((sA^2 + sB^2) / 2)
  bool degenerate = false;  // both groups have zero variance
};

EffectStats effect_stats(const std::vector<double>& a, const std::vector<double>& b);
/// Summary-statistics form; no rank test.
EffectStats effect_stats(const GroupSummary& a, const GroupSummary& b);

inline constexpr int kHistogramBins = 20;

struct ConceptDistribution {
  std::string name;
  std::array<long, kHistogramBins> counts{};  // bins of width 0.05 on [0, 1]
  double mean = 0.0;
};

struct ActivationDistribution {
  long ticks = 0;  // self-driving ticks with activations
  std::vector<ConceptDistribution> concepts;
  bool empty() const { return ticks == 0; }
};

/// Histograms of the chosen candidate's activations over self-driving ticks.
/// Throws std::invalid_argument when a name is missing from the log.
ActivationDistribution activation_distribution(const harness::DriveLog& log, const std::vector<std::string>& names);

struct DistributionReport {
  ActivationDistribution a, b;
  bool empty = false;  // either side has no self-driving ticks
};

DistributionReport distribution_report(const harness::DriveLog& a, const harness::DriveLog& b,
                                       const std::vector<std::string>& names);

}  // namespace cdrive::eval
