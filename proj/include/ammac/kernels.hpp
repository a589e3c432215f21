#ifndef AMMAC_KERNELS_HPP
#define AMMAC_KERNELS_HPP

#include <cstddef>
#include <vector>

#include "ammac/special.hpp"

// Data-parallel inner loops used by the entropy engine, the KKT scans and
// the Monte Carlo oracle. Every kernel evaluates its per-index terms into a
// buffer (one slot per index) and reduces the buffer in index order, so the
// OpenMP versions are bit-identical to the serial references for any thread
// count. The serial references are kept for tests and the benchmark tool.

namespace ammac::kernels {

// Number of indices below which the parallel kernels fall back to the
// serial path (OpenMP region overhead dominates tiny loops).
inline constexpr std::size_t kParallelCutoff = 256;

template <class F>
double indexed_sum_serial(std::size_t n, F&& term) {
  std::vector<double> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = term(i);
  return compensated_sum(buf);
}

template <class F>
double indexed_sum_parallel(std::size_t n, F&& term) {
  std::vector<double> buf(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    buf[static_cast<std::size_t>(i)] = term(static_cast<std::size_t>(i));
  return compensated_sum(buf);
}

template <class F>
double indexed_sum(std::size_t n, F&& term) {
  if (n < kParallelCutoff) return indexed_sum_serial(n, term);
  return indexed_sum_parallel(n, term);
}

template <class F>
void indexed_fill_serial(std::size_t n, std::vector<double>& out, F&& term) {
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = term(i);
}

template <class F>
void indexed_fill_parallel(std::size_t n, std::vector<double>& out, F&& term) {
  out.resize(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    out[static_cast<std::size_t>(i)] = term(static_cast<std::size_t>(i));
}

template <class F>
void indexed_fill(std::size_t n, std::vector<double>& out, F&& term) {
  if (n < kParallelCutoff)
    indexed_fill_serial(n, out, term);
  else
    indexed_fill_parallel(n, out, term);
}

}  // namespace ammac::kernels

#endif
