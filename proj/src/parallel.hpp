#pragma once

#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

// Parallel kernels with a serial reference path. Reductions are blocked so the
// summation order is fixed by the block layout, never by the thread count:
// serial and parallel runs of the same kernel are byte-identical.

namespace lab {

enum class Exec { Serial, Parallel };

inline int hardware_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline constexpr std::size_t kBlock = 4096;

// f(i) is evaluated for i in [0, n); partial sums are accumulated per block in
// index order, then blocks are folded serially in index order.
template <class F>
double map_sum_serial(std::size_t n, F&& f) {
  std::size_t nblocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(nblocks, 0.0);
  for (std::size_t b = 0; b < nblocks; ++b) {
    double s = 0.0;
    std::size_t end = std::min(n, (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) s += f(i);
    partial[b] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

template <class F>
double map_sum_parallel(std::size_t n, F&& f) {
  std::size_t nblocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(nblocks, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long b = 0; b < long(nblocks); ++b) {
    double s = 0.0;
    std::size_t end = std::min(n, std::size_t(b + 1) * kBlock);
    for (std::size_t i = std::size_t(b) * kBlock; i < end; ++i) s += f(i);
    partial[std::size_t(b)] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

template <class F>
double map_sum(std::size_t n, F&& f, Exec ex = Exec::Parallel) {
  return ex == Exec::Serial ? map_sum_serial(n, f) : map_sum_parallel(n, f);
}

// Elementwise max of f(i) over [0, n); order-independent, still blocked for the
// parallel path.
template <class F>
double map_max(std::size_t n, F&& f, Exec ex = Exec::Parallel) {
  std::size_t nblocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(nblocks, -1e308);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (ex == Exec::Parallel)
#endif
  for (long b = 0; b < long(nblocks); ++b) {
    double s = -1e308;
    std::size_t end = std::min(n, std::size_t(b + 1) * kBlock);
    for (std::size_t i = std::size_t(b) * kBlock; i < end; ++i) s = std::max(s, f(i));
    partial[std::size_t(b)] = s;
  }
  double total = -1e308;
  for (double p : partial) total = std::max(total, p);
  return total;
}

// Plain parallel loop; f(i) must write to disjoint state.
template <class F>
void parallel_for(std::size_t n, F&& f, Exec ex = Exec::Parallel) {
  if (ex == Exec::Serial) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long i = 0; i < long(n); ++i) f(std::size_t(i));
}

}  // namespace lab
