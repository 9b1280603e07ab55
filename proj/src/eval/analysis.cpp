#include "cdrive/eval/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace cdrive::eval {

InterceptFit fit_intercept(const std::vector<double>& p, const std::vector<double>& speed) {
  if (p.size() != speed.size()) throw std::invalid_argument("fit_intercept: series lengths differ");
  if (p.size() < 2) throw std::invalid_argument("fit_intercept: need at least 2 points");
  const double n = p.size();
  const double mp = std::accumulate(p.begin(), p.end(), 0.0) / n;
  const double ms = std::accumulate(speed.begin(), speed.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double dx = p[i] - mp, dy = speed[i] - ms;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
    scale += p[i] * p[i];
  }
  InterceptFit f;
  f.n = static_cast<int>(p.size());
  if (sxx <= 1e-24 * std::max(scale, 1e-300)) {
    f.constant_regressor = true;
    f.intercept = ms;
    return f;
  }
  const double slope = sxy / sxx;
  f.slope = slope;
  f.intercept = ms - slope * mp;
  double ssr = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double e = speed[i] - (slope * p[i] + f.intercept);
    ssr += e * e;
  }
  f.r2 = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
  return f;
}

double dtw_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("dtw_distance: empty series");
  const std::size_t n = a.size(), m = b.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = inf;
    for (std::size_t j = 1; j <= m; ++j) {
      const double d = a[i - 1] - b[j - 1];
      cur[j] = d * d + std::min({prev[j], cur[j - 1], prev[j - 1]});
    }
    std::swap(prev, cur);
  }
  return std::sqrt(prev[m]);
}

GroupSummary summarize(const std::vector<double>& x) {
  if (x.size() < 2) throw std::invalid_argument("summarize: need at least 2 samples");
  GroupSummary g;
  g.n = static_cast<int>(x.size());
  g.mean = std::accumulate(x.begin(), x.end(), 0.0) / g.n;
  double ss = 0.0;
  for (double v : x) ss += (v - g.mean) * (v - g.mean);
  g.sd = std::sqrt(ss / (g.n - 1));
  return g;
}

EffectStats effect_stats(const GroupSummary& a, const GroupSummary& b) {
  if (a.n < 2 || b.n < 2) throw std::invalid_argument("effect_stats: need n >= 2 per group");
  if (a.sd < 0 || b.sd < 0) throw std::invalid_argument("effect_stats: negative standard deviation");
  EffectStats s;
  const double diff = a.mean - b.mean;
  const double va = a.sd * a.sd / a.n, vb = b.sd * b.sd / b.n;
  if (va + vb == 0.0) {
    s.degenerate = true;
    const double inf = std::numeric_limits<double>::infinity();
    s.welch_t = s.cohens_d = diff == 0.0 ? 0.0 : std::copysign(inf, diff);
    s.p_t = diff == 0.0 ? 1.0 : 0.0;
    s.welch_df = a.n + b.n - 2;
    return s;
  }
  s.welch_t = diff / std::sqrt(va + vb);
  s.welch_df = (va + vb) * (va + vb) / (va * va / (a.n - 1) + vb * vb / (b.n - 1));
  const boost::math::students_t dist(s.welch_df);
  s.p_t = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(s.welch_t))));
  s.cohens_d = diff / std::sqrt((a.sd * a.sd + b.sd * b.sd) / 2.0);
  return s;
}

EffectStats effect_stats(const std::vector<double>& a, const std::vector<double>& b) {
  EffectStats s = effect_stats(summarize(a), summarize(b));

  // Mann-Whitney from average ranks of the pooled sample.
  std::vector<std::pair<double, int>> pooled;
  for (double v : a) pooled.push_back({v, 0});
  for (double v : b) pooled.push_back({v, 1});
  std::sort(pooled.begin(), pooled.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  const double na = a.size(), nb = b.size(), n = na + nb;
  double rank_a = 0.0, ties = 0.0;
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j].first == pooled[i].first) ++j;
    const double t = j - i, avg = (i + 1 + j) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (pooled[k].second == 0) rank_a += avg;
    ties += t * t * t - t;
    i = j;
  }
  const double u = rank_a - na * (na + 1) / 2.0;
  const double mu = na * nb / 2.0;
  const double var = na * nb / 12.0 * ((n + 1) - ties / (n * (n - 1)));
  s.mann_whitney_u = u;
  if (var <= 0.0) {
    s.p_u = 1.0;
  } else {
    const double z = std::max(0.0, std::abs(u - mu) - 0.5) / std::sqrt(var);
    s.p_u = std::erfc(z / std::sqrt(2.0));
  }
  return s;
}

ActivationDistribution activation_distribution(const harness::DriveLog& log, const std::vector<std::string>& names) {
  ActivationDistribution d;
  std::vector<int> cols;
  for (const auto& name : names) {
    const int c = log.concept_index(name);
    if (c < 0) throw std::invalid_argument("activation_distribution: log has no concept '" + name + "'");
    cols.push_back(c);
    d.concepts.push_back({name, {}, 0.0});
  }
  for (const auto& t : log.ticks) {
    if (t.mode != harness::AutonomyMode::self_driving || t.activations.empty()) continue;
    if (t.activations.size() != log.concept_names.size())
      throw std::invalid_argument("activation_distribution: tick " + std::to_string(t.tick) + " has wrong width");
    ++d.ticks;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      const double v = t.activations[cols[i]];
      if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("activation_distribution: activation outside [0, 1]");
      const int bin = std::min(kHistogramBins - 1, static_cast<int>(v * kHistogramBins));
      d.concepts[i].counts[bin]++;
      d.concepts[i].mean += v;
    }
  }
  if (d.ticks > 0)
    for (auto& c : d.concepts) c.mean /= d.ticks;
  return d;
}

DistributionReport distribution_report(const harness::DriveLog& a, const harness::DriveLog& b,
                                       const std::vector<std::string>& names) {
  DistributionReport r{activation_distribution(a, names), activation_distribution(b, names), false};
  r.empty = r.a.empty() || r.b.empty();
  return r;
}

}  // namespace cdrive::eval
