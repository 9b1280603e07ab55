#pragma once

#include <cmath>

namespace cdrive::ad {

/// Focal-modulated negative log-likelihood written in terms of log p:
/// loss = (1 - p)^gamma * (-log p), plus its derivative with respect to log p.
struct FocalTerm {
  double loss = 0.0;
  double dloss_dlogp = 0.0;
};

inline FocalTerm focal_from_logp(double log_p, double gamma) {
  const double p = std::exp(log_p);
  const double q = -std::expm1(log_p);  // 1 - p without cancellation
  if (gamma == 0.0) return {-log_p, -1.0};
  const double mod = std::pow(q, gamma);
  double d = -mod;
  if (q > 0.0) d += gamma * std::pow(q, gamma - 1.0) * p * log_p;
  return {mod * -log_p, d};
}

}  // namespace cdrive::ad
