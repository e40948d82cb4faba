#include "qmetro/parallel.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qmetro::par {

namespace {
std::atomic<bool> g_parallel{true};
}

void set_parallel(bool on) { g_parallel.store(on); }

bool parallel_enabled() {
#ifdef _OPENMP
  return g_parallel.load();
#else
  return false;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return parallel_enabled() ? omp_get_max_threads() : 1;
#else
  return 1;
#endif
}

namespace detail {

void run_indexed(std::int64_t n, void* ctx, void (*body)(void*, std::int64_t)) {
#ifdef _OPENMP
  if (g_parallel.load() && n > 1) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) body(ctx, i);
    return;
  }
#endif
  for (std::int64_t i = 0; i < n; ++i) body(ctx, i);
}

}  // namespace detail
}  // namespace qmetro::par
