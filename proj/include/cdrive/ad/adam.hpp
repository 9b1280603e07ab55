#pragma once

#include <stdexcept>

#include "cdrive/ad/params.hpp"

namespace cdrive::ad {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  long step = 0;
  std::map<std::string, Matrix> m;
  std::map<std::string, Matrix> v;
};

class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& detail = "")
      : std::runtime_error(detail.empty() ? "divergence" : "divergence: " + detail) {}
};

/// One bias-corrected adaptive-moment update. Gradients for frozen arrays
/// are ignored. Throws DivergenceError (parameters and state untouched) on
/// any non-finite gradient, std::invalid_argument on a shape mismatch or an
/// unknown array.
void adam_step(ParamSet& params, const Gradients& grads, AdamState& state, const AdamConfig& config = {});

}  // namespace cdrive::ad
