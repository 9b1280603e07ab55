#pragma once

#include <functional>
#include <vector>

#include "cdrive/ad/params.hpp"

namespace cdrive::kernels {

struct ItemGradient {
  double loss = 0.0;
  ad::Gradients grads;
};

using ItemFn = std::function<ItemGradient(int item)>;

/// Sum of per-item losses and gradients over items [0, n), added in index
/// order. The parallel variant evaluates items concurrently and gives
/// bitwise the same result.
ItemGradient sum_gradients_serial(int n, const ItemFn& item);
ItemGradient sum_gradients_parallel(int n, const ItemFn& item);
inline ItemGradient sum_gradients(int n, const ItemFn& item, bool parallel) {
  return parallel ? sum_gradients_parallel(n, item) : sum_gradients_serial(n, item);
}

/// out[i] = fn(i) for i in [0, n).
template <class T>
std::vector<T> map_serial(int n, const std::function<T(int)>& fn) {
  std::vector<T> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(fn(i));
  return out;
}

template <class T>
std::vector<T> map_parallel(int n, const std::function<T(int)>& fn) {
  std::vector<T> out(n);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) out[i] = fn(i);
  return out;
}

template <class T>
std::vector<T> map_items(int n, const std::function<T(int)>& fn, bool parallel) {
  return parallel ? map_parallel<T>(n, fn) : map_serial<T>(n, fn);
}

}  // namespace cdrive::kernels
