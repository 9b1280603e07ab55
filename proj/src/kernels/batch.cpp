#include "cdrive/kernels/batch.hpp"

#include <exception>

namespace cdrive::kernels {

ItemGradient sum_gradients_serial(int n, const ItemFn& item) {
  ItemGradient total;
  for (int i = 0; i < n; ++i) {
    ItemGradient g = item(i);
    total.loss += g.loss;
    ad::accumulate(total.grads, g.grads);
  }
  return total;
}

ItemGradient sum_gradients_parallel(int n, const ItemFn& item) {
  std::vector<ItemGradient> parts(n);
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      parts[i] = item(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  // fixed-order reduction keeps the result independent of scheduling
  ItemGradient total;
  for (auto& g : parts) {
    total.loss += g.loss;
    ad::accumulate(total.grads, g.grads);
  }
  return total;
}

}  // namespace cdrive::kernels
