#include "cdrive/ad/adam.hpp"

#include <cmath>

namespace cdrive::ad {

void adam_step(ParamSet& params, const Gradients& grads, AdamState& state, const AdamConfig& config) {
  // validate everything before touching parameters so a bad step leaves no trace
  for (const auto& [name, g] : grads) {
    const auto& v = params.value(name);
    if (g.rows() != v.rows() || g.cols() != v.cols())
      throw std::invalid_argument("gradient shape mismatch for '" + name + "'");
    if (!g.allFinite()) throw DivergenceError("non-finite gradient for '" + name + "'");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (const auto& [name, g] : grads) {
    const std::size_t i = params.index_of(name);
    if (!params.trainable(i)) continue;
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.size() == 0) {
      m = Matrix::Zero(g.rows(), g.cols());
      v = Matrix::Zero(g.rows(), g.cols());
    }
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
    auto p = params.data(i);
    p.array() -= config.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + config.epsilon);
  }
}

}  // namespace cdrive::ad
