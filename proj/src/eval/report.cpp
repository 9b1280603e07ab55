#include "cdrive/eval/report.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace cdrive::eval {

using nlohmann::json;

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string fmt_opt(const char* f, const std::optional<double>& v) { return v ? fmt(f, *v) : "-"; }

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s : s + std::string(w - s.size(), ' '); }

}  // namespace

json to_json(const MetricsReport& r) {
  json l2 = json::object();
  for (const auto& [h, v] : r.l2_at) l2[std::to_string(h)] = v;
  return {{"avg_l2", r.avg_l2},
          {"l2_at", l2},
          {"progress", r.progress},
          {"collision_rate", r.collision_rate},
          {"decel_time_diff", opt(r.decel_time_diff)},
          {"start_delay", opt(r.start_delay)},
          {"runs", r.runs},
          {"ticks", r.ticks}};
}

json to_json(const ConceptReport& r) {
  json per = json::object();
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    const auto& s = r.per_concept[i];
    per[r.names[i]] = {{"accuracy", s.accuracy},
                       {"precision", s.precision},
                       {"recall", s.recall},
                       {"f1", s.f1},
                       {"tp", s.counts.tp},
                       {"fp", s.counts.fp},
                       {"fn", s.counts.fn},
                       {"tn", s.counts.tn}};
  }
  return {{"concepts", per}, {"ranker_agreement", opt(r.ranker_agreement)}};
}

json to_json(const InterceptFit& f) {
  return {{"slope", opt(f.slope)},
          {"intercept", f.intercept},
          {"r2", opt(f.r2)},
          {"constant_regressor", f.constant_regressor},
          {"n", f.n}};
}

json to_json(const EffectStats& s) {
  return {{"welch_t", s.welch_t},   {"welch_df", s.welch_df}, {"p_t", s.p_t},
          {"mann_whitney_u", opt(s.mann_whitney_u)}, {"p_u", opt(s.p_u)},
          {"cohens_d", s.cohens_d}, {"degenerate", s.degenerate}};
}

json to_json(const DistributionReport& r) {
  auto side = [](const ActivationDistribution& d) {
    json c = json::object();
    for (const auto& x : d.concepts) c[x.name] = {{"mean", x.mean}, {"counts", x.counts}};
    return json{{"ticks", d.ticks}, {"concepts", c}};
  };
  return {{"a", side(r.a)}, {"b", side(r.b)}, {"empty", r.empty}, {"bins", kHistogramBins}};
}

std::string format_metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::ostringstream s;
  s << pad("run", 18) << pad("runs", 6) << pad("avg_l2", 9) << pad("l2@3s", 9) << pad("l2@5s", 9) << pad("l2@10s", 9)
    << pad("progress", 10) << pad("collide", 9) << pad("decel_dt", 10) << "start_dt\n";
  for (const auto& [name, r] : rows) {
    auto at = [&](int h) {
      const auto it = r.l2_at.find(h);
      return it == r.l2_at.end() ? std::string("-") : fmt("%.3f", it->second);
    };
    s << pad(name, 18) << pad(std::to_string(r.runs), 6) << pad(fmt("%.3f", r.avg_l2), 9) << pad(at(3), 9)
      << pad(at(5), 9) << pad(at(10), 9) << pad(fmt("%.4f", r.progress), 10) << pad(fmt("%.3f", r.collision_rate), 9)
      << pad(fmt_opt("%+.2f", r.decel_time_diff), 10) << fmt_opt("%+.2f", r.start_delay) << '\n';
  }
  return s.str();
}

std::string format_concept_table(const ConceptReport& r) {
  std::ostringstream s;
  s << pad("concept", 16) << pad("acc", 8) << pad("prec", 8) << pad("recall", 8) << pad("f1", 8) << "positives\n";
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    const auto& c = r.per_concept[i];
    s << pad(r.names[i], 16) << pad(fmt("%.3f", c.accuracy), 8) << pad(fmt("%.3f", c.precision), 8)
      << pad(fmt("%.3f", c.recall), 8) << pad(fmt("%.3f", c.f1), 8) << c.counts.tp + c.counts.fn << '\n';
  }
  if (r.ranker_agreement) s << "ranker agreement " << fmt("%.4f", *r.ranker_agreement) << '\n';
  return s.str();
}

std::string format_distribution_table(const DistributionReport& r) {
  std::ostringstream s;
  if (r.empty) s << "(empty: a log has no self-driving ticks)\n";
  s << pad("concept", 16) << pad("mean_a", 10) << "mean_b\n";
  for (std::size_t i = 0; i < r.a.concepts.size(); ++i)
    s << pad(r.a.concepts[i].name, 16) << pad(fmt("%.4f", r.a.concepts[i].mean), 10)
      << fmt("%.4f", r.b.concepts[i].mean) << '\n';
  s << "ticks " << r.a.ticks << " / " << r.b.ticks << '\n';
  return s.str();
}

std::vector<double> speed_profile(const harness::DriveLog& log) {
  std::vector<double> v;
  v.reserve(log.ticks.size());
  for (const auto& t : log.ticks) v.push_back(t.ego.speed);
  return v;
}

std::vector<double> concept_series(const harness::DriveLog& log, const std::string& name) {
  const int c = log.concept_index(name);
  if (c < 0) throw std::invalid_argument("log has no concept '" + name + "'");
  std::vector<double> v;
  for (const auto& t : log.ticks)
    v.push_back(t.activations.empty() ? std::numeric_limits<double>::quiet_NaN() : t.activations.at(c));
  return v;
}

std::vector<double> rolling_mean(const std::vector<double>& x, int window) {
  if (window < 1) throw std::invalid_argument("rolling_mean: window < 1");
  std::vector<double> out(x.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double sum = 0.0;
    int n = 0;
    for (std::size_t j = i + 1 > std::size_t(window) ? i + 1 - window : 0; j <= i; ++j)
      if (!std::isnan(x[j])) sum += x[j], ++n;
    if (n > 0) out[i] = sum / n;
  }
  return out;
}

void write_timeseries_csv(std::ostream& out, const harness::DriveLog& log) {
  out << "time,tick,mode,speed,backstop";
  for (const auto& n : log.concept_names) out << ',' << n;
  out << '\n';
  for (const auto& t : log.ticks) {
    out << fmt("%.3f", t.time) << ',' << t.tick << ',' << harness::to_string(t.mode) << ',' << fmt("%.4f", t.ego.speed)
        << ',' << (t.backstop ? 1 : 0);
    for (std::size_t i = 0; i < log.concept_names.size(); ++i)
      out << ',' << (i < t.activations.size() ? fmt("%.6f", t.activations[i]) : std::string());
    out << '\n';
  }
}

}  // namespace cdrive::eval
