#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

namespace qmetro::par {

// Runtime switch between the OpenMP kernels and the serial reference path.
// Both paths must produce bit-identical results: loop bodies write to
// disjoint slots and reductions are finished serially in index order.
void set_parallel(bool on);
bool parallel_enabled();
int max_threads();

namespace detail {
void run_indexed(std::int64_t n, void* ctx, void (*body)(void*, std::int64_t));
}

// Applies f(i) for i in [0, n).  f must only touch state owned by index i.
template <class F>
void for_each_index(std::int64_t n, F&& f) {
  detail::run_indexed(n, &f, [](void* ctx, std::int64_t i) { (*static_cast<F*>(ctx))(i); });
}

// Sum of f(i) over [0, n), accumulated in index order regardless of the
// execution path.
template <class F>
double indexed_sum(std::int64_t n, F&& f) {
  std::vector<double> terms(static_cast<std::size_t>(n));
  for_each_index(n, [&](std::int64_t i) { terms[static_cast<std::size_t>(i)] = f(i); });
  return std::accumulate(terms.begin(), terms.end(), 0.0);
}

}  // namespace qmetro::par
