#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cdrive/harness/drive_log.hpp"
#include "cdrive/trajgen/trajectory.hpp"

namespace cdrive::eval {

inline constexpr int kL2Horizons[] = {3, 5, 10};

struct MetricsReport {
  double avg_l2 = 0.0;           // m, ego vs reference at matched ticks
  std::map<int, double> l2_at;   // horizon s -> m, planned waypoint vs reference; absent when unmeasurable
  double progress = 0.0;         // ego arclength / reference arclength
  double collision_rate = 0.0;   // fraction of runs with an at-fault collision
  std::optional<double> decel_time_diff;  // s, ego minus reference braking onset
  std::optional<double> start_delay;      // s, ego minus reference start from stationary
  int runs = 1;
  int ticks = 0;
};

/// `reference` holds the expert's poses at the log's tick spacing, starting at
/// tick 0, with at least as many samples as ticks (plus the plan horizon for
/// the l2_at entries). Throws std::invalid_argument on misaligned timelines.
MetricsReport driving_metrics(const harness::DriveLog& log, const trajgen::Trajectory& reference);

/// Run-weighted mean; optional fields average over the runs that have them.
MetricsReport aggregate(const std::vector<MetricsReport>& reports);

/// Relative difference |a - b| / |b|; 0 when both are 0.
double relative_difference(double a, double b);

struct ConfusionCounts {
  long tp = 0, fp = 0, fn = 0, tn = 0;
  long total() const { return tp + fp + fn + tn; }
};

struct BinaryStats {
  double accuracy = 0.0;
  double precision = 0.0;  // 0 without predicted positives
  double recall = 0.0;     // 0 without actual positives
  double f1 = 0.0;         // 0 when precision and recall are both 0
  ConfusionCounts counts;
};

/// Throws std::invalid_argument on zero counts.
BinaryStats binary_stats(const ConfusionCounts& c);

struct ConceptReport {
  std::vector<std::string> names;
  std::vector<BinaryStats> per_concept;
  std::optional<double> ranker_agreement;

  const BinaryStats& at(const std::string& name) const;
};

/// Rows are samples, columns follow `names`. Both predictions and labels are
/// binarized at `threshold`. Throws on empty or ragged input.
ConceptReport concept_metrics(const std::vector<std::vector<double>>& predictions,
                              const std::vector<std::vector<double>>& labels, const std::vector<std::string>& names,
                              double threshold = 0.5);

/// Fraction of equal entries. Throws on empty or mismatched input.
double ranker_agreement(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace cdrive::eval
