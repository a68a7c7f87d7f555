#pragma once
#include <cstdint>
#include <vector>

namespace occu::kern {

inline constexpr std::uint64_t kBlockSize = 8192;

/** Kahan sum of f(i) for i in [lo, hi). */
template <class F>
double kahan_sum(std::uint64_t lo, std::uint64_t hi, F&& f) {
  double s = 0.0, c = 0.0;
  for (std::uint64_t i = lo; i < hi; ++i) {
    const double y = f(i) - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

/** Deterministic blocked sum of f(0..n-1): Kahan partial sums over fixed
 *  blocks of kBlockSize terms, then a Kahan combine in block order. The
 *  result is bitwise independent of the thread count. */
template <class F>
double blocked_sum_serial(std::uint64_t n, F&& f) {
  const std::uint64_t nb = (n + kBlockSize - 1) / kBlockSize;
  double s = 0.0, c = 0.0;
  for (std::uint64_t b = 0; b < nb; ++b) {
    const std::uint64_t lo = b * kBlockSize;
    const std::uint64_t hi = lo + kBlockSize < n ? lo + kBlockSize : n;
    const double y = kahan_sum(lo, hi, f) - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

template <class F>
double blocked_sum(std::uint64_t n, F&& f) {
  const std::uint64_t nb = (n + kBlockSize - 1) / kBlockSize;
  if (nb < 2) return blocked_sum_serial(n, f);
  std::vector<double> partial(nb);
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(nb); ++b) {
    const std::uint64_t lo = static_cast<std::uint64_t>(b) * kBlockSize;
    const std::uint64_t hi = lo + kBlockSize < n ? lo + kBlockSize : n;
    partial[static_cast<std::uint64_t>(b)] = kahan_sum(lo, hi, f);
  }
  double s = 0.0, c = 0.0;
  for (double p : partial) {
    const double y = p - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

}  // namespace occu::kern
