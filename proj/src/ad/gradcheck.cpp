#include "cdrive/ad/gradcheck.hpp"

#include <cmath>
#include <cstdio>
#include <algorithm>
#include <random>

namespace cdrive::ad {

GradCheckResult check_gradients(ParamSet& params, const Gradients& grads,
                                const std::function<double(const ParamSet&)>& loss, int samples,
                                std::uint64_t seed, double eps, double tolerance, double floor) {
  // flat index over every scalar of the gradient arrays, in key order
  std::vector<std::pair<const std::string*, Eigen::Index>> pool;
  for (const auto& [name, g] : grads)
    for (Eigen::Index k = 0; k < g.size(); ++k) pool.emplace_back(&name, k);

  GradCheckResult res;
  if (pool.empty()) return res;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n = std::min<std::size_t>(order.size(), static_cast<std::size_t>(samples));

  for (std::size_t s = 0; s < n; ++s) {
    const auto& [name, k] = pool[order[s]];
    const std::size_t idx = params.index_of(*name);
    auto data = params.data(idx);
    const double orig = data.data()[k];
    data.data()[k] = orig + eps;
    const double up = loss(params);
    data.data()[k] = orig - eps;
    const double down = loss(params);
    data.data()[k] = orig;
    const double numeric = (up - down) / (2.0 * eps);
    const double analytic = grads.at(*name).data()[k];
    const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
    res.max_rel_error = std::max(res.max_rel_error, rel);
    ++res.checked;
    if (rel > tolerance) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s[%ld]: %.10g vs %.10g", name->c_str(), static_cast<long>(k), analytic,
                    numeric);
      res.failures.emplace_back(buf);
    }
  }
  return res;
}

}  // namespace cdrive::ad
