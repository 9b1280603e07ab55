#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cdrive/ad/params.hpp"

namespace cdrive::ad {

struct GradCheckResult {
  int checked = 0;
  double max_rel_error = 0.0;
  std::vector<std::string> failures;  // "name[k]: analytic vs numeric"
};

/// Compares analytic gradients against central differences on `samples`
/// randomly drawn scalars of the trainable arrays in `grads`. The relative
/// error is |a - n| / max(|a|, |n|, floor).
GradCheckResult check_gradients(ParamSet& params, const Gradients& grads,
                                const std::function<double(const ParamSet&)>& loss, int samples,
                                std::uint64_t seed, double eps = 1e-5, double tolerance = 1e-4,
                                double floor = 1e-8);

}  // namespace cdrive::ad
