#include "cdrive/eval/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace cdrive::eval {

namespace {

constexpr double kBrakeOnset = 0.5;   // m/s^2 sustained over one tick
constexpr double kStationary = 0.1;   // m/s
constexpr double kStarted = 0.5;      // m/s

double dist(double ax, double ay, double bx, double by) { return std::hypot(ax - bx, ay - by); }

std::optional<double> brake_onset(const std::vector<double>& v, double dt) {
  for (std::size_t i = 0; i + 1 < v.size(); ++i)
    if (v[i] - v[i + 1] > kBrakeOnset * dt) return i * dt;
  return std::nullopt;
}

std::optional<double> start_time(const std::vector<double>& v, double dt) {
  if (v.empty() || v[0] >= kStationary) return std::nullopt;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] > kStarted) return i * dt;
  return std::nullopt;
}

}  // namespace

MetricsReport driving_metrics(const harness::DriveLog& log, const trajgen::Trajectory& reference) {
  const auto& ticks = log.ticks;
  const auto& ref = reference.waypoints;
  const std::size_t n = ticks.size();
  if (n == 0) throw std::invalid_argument("driving_metrics: empty log");
  if (std::abs(reference.dt - log.dt) > 1e-9) throw std::invalid_argument("driving_metrics: reference dt differs from log dt");
  if (ref.size() < n) throw std::invalid_argument("driving_metrics: reference shorter than log");
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(ticks[i].time - i * log.dt) > 1e-6)
      throw std::invalid_argument("driving_metrics: tick " + std::to_string(i) + " is off the dt grid");

  MetricsReport r;
  r.ticks = static_cast<int>(n);
  double l2 = 0.0, ego_len = 0.0, ref_len = 0.0;
  bool collided = false;
  std::vector<double> ego_v(n), ref_v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = ticks[i].ego;
    l2 += dist(e.position.x, e.position.y, ref[i].x, ref[i].y);
    if (i > 0) {
      const auto& p = ticks[i - 1].ego.position;
      ego_len += dist(e.position.x, e.position.y, p.x, p.y);
      ref_len += dist(ref[i].x, ref[i].y, ref[i - 1].x, ref[i - 1].y);
    }
    collided = collided || (ticks[i].collision && ticks[i].at_fault);
    ego_v[i] = e.speed;
    ref_v[i] = ref[i].speed;
  }
  r.avg_l2 = l2 / n;
  r.progress = ref_len > 1e-9 ? ego_len / ref_len : 1.0;
  r.collision_rate = collided ? 1.0 : 0.0;

  for (int h : kL2Horizons) {
    const auto ahead = static_cast<std::size_t>(std::lround(h / log.dt));
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < n && i + ahead < ref.size(); ++i) {
      const auto& plan = ticks[i].plan;
      if (plan.waypoints.empty()) continue;
      const auto j = static_cast<std::size_t>(std::lround(h / plan.dt));
      if (std::abs(j * plan.dt - h) > 1e-9 || j >= plan.waypoints.size()) continue;
      const auto& w = plan.waypoints[j];
      sum += dist(w.x, w.y, ref[i + ahead].x, ref[i + ahead].y);
      ++count;
    }
    if (count > 0) r.l2_at[h] = sum / count;
  }

  const auto eb = brake_onset(ego_v, log.dt), rb = brake_onset(ref_v, log.dt);
  if (eb && rb) r.decel_time_diff = *eb - *rb;
  const auto es = start_time(ego_v, log.dt), rs = start_time(ref_v, log.dt);
  if (es && rs) r.start_delay = *es - *rs;
  return r;
}

MetricsReport aggregate(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("aggregate: no reports");
  MetricsReport out;
  out.runs = 0;
  double runs = 0.0;
  std::map<int, std::pair<double, double>> l2_at;
  std::pair<double, double> decel{0, 0}, start{0, 0};
  for (const auto& r : reports) {
    const double w = r.runs;
    runs += w;
    out.runs += r.runs;
    out.ticks += r.ticks;
    out.avg_l2 += w * r.avg_l2;
    out.progress += w * r.progress;
    out.collision_rate += w * r.collision_rate;
    for (const auto& [h, v] : r.l2_at) {
      l2_at[h].first += w * v;
      l2_at[h].second += w;
    }
    if (r.decel_time_diff) decel = {decel.first + w * *r.decel_time_diff, decel.second + w};
    if (r.start_delay) start = {start.first + w * *r.start_delay, start.second + w};
  }
  out.avg_l2 /= runs;
  out.progress /= runs;
  out.collision_rate /= runs;
  for (const auto& [h, s] : l2_at) out.l2_at[h] = s.first / s.second;
  if (decel.second > 0) out.decel_time_diff = decel.first / decel.second;
  if (start.second > 0) out.start_delay = start.first / start.second;
  return out;
}

double relative_difference(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::abs(b);
}

BinaryStats binary_stats(const ConfusionCounts& c) {
  if (c.total() <= 0) throw std::invalid_argument("binary_stats: no samples");
  BinaryStats s;
  s.counts = c;
  s.accuracy = double(c.tp + c.tn) / c.total();
  s.precision = c.tp + c.fp > 0 ? double(c.tp) / (c.tp + c.fp) : 0.0;
  s.recall = c.tp + c.fn > 0 ? double(c.tp) / (c.tp + c.fn) : 0.0;
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

const BinaryStats& ConceptReport::at(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return per_concept[i];
  throw std::out_of_range("concept report has no '" + name + "'");
}

ConceptReport concept_metrics(const std::vector<std::vector<double>>& predictions,
                              const std::vector<std::vector<double>>& labels, const std::vector<std::string>& names,
                              double threshold) {
  if (predictions.empty()) throw std::invalid_argument("concept_metrics: empty input");
  if (predictions.size() != labels.size()) throw std::invalid_argument("concept_metrics: row count mismatch");
  const std::size_t k = names.size();
  std::vector<ConfusionCounts> counts(k);
  for (std::size_t r = 0; r < predictions.size(); ++r) {
    if (predictions[r].size() != k || labels[r].size() != k)
      throw std::invalid_argument("concept_metrics: row " + std::to_string(r) + " width mismatch");
    for (std::size_t c = 0; c < k; ++c) {
      const bool p = predictions[r][c] >= threshold, y = labels[r][c] >= threshold;
      auto& n = counts[c];
      (p ? (y ? n.tp : n.fp) : (y ? n.fn : n.tn))++;
    }
  }
  ConceptReport rep;
  rep.names = names;
  for (const auto& c : counts) rep.per_concept.push_back(binary_stats(c));
  return rep;
}

double ranker_agreement(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.empty()) throw std::invalid_argument("ranker_agreement: empty input");
  if (a.size() != b.size()) throw std::invalid_argument("ranker_agreement: size mismatch");
  long same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return double(same) / a.size();
}

}  // namespace cdrive::eval
