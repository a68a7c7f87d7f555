// Timing harness for the blocked reduction kernels: the OpenMP-parallel
// blocked_sum against the serial reference on expectation-style workloads.
// Usage: occu_bench [terms] [repeats]
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "occu/kernels.hpp"
#include "occu/numerics.hpp"

namespace {

using Clock = std::chrono::steady_clock;

template <class F>
double time_ms(std::uint64_t repeats, F&& run, double& value) {
  double best = 1e300;
  for (std::uint64_t rep = 0; rep < repeats; ++rep) {
    const auto t0 = Clock::now();
    value = run();
    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    if (ms < best) best = ms;
  }
  return best;
}

struct Workload {
  std::string name;
  std::function<double(std::uint64_t)> term;
};

}  // namespace

int main(int argc, char** argv) {
  const std::uint64_t n = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 4000000;
  const std::uint64_t repeats = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 5;

  // binomial kernel over synthetic power-law masses, the exact-EM inner loop
  const double lb = occu::num::log_binom(100000, 2);
  const auto kernel_term = [lb](std::uint64_t i) {
    const double p = std::pow(static_cast<double>(i + 1), -2.0) / 1.6449340668482264;
    return std::exp(lb + 3.0 * std::log(p) + 99998.0 * std::log1p(-p));
  };
  // light arithmetic-only load, the realized-statistics accumulation shape
  const auto light_term = [](std::uint64_t i) {
    const double x = static_cast<double>(i % 8191) * 1.220703125e-4;
    return x * (1.0 - x);
  };
  const std::vector<Workload> workloads = {{"binomial_kernel", kernel_term},
                                           {"light_arith", light_term}};

  std::printf("%-16s %10s %12s %12s %9s %8s\n", "workload", "terms", "serial_ms",
              "parallel_ms", "speedup", "bitwise");
  for (const auto& w : workloads) {
    double v_serial = 0.0, v_parallel = 0.0;
    const double ser = time_ms(repeats, [&] {
      return occu::kern::blocked_sum_serial(n, w.term);
    }, v_serial);
    const double par = time_ms(repeats, [&] {
      return occu::kern::blocked_sum(n, w.term);
    }, v_parallel);
    std::printf("%-16s %10llu %12.2f %12.2f %9.2f %8s\n", w.name.c_str(),
                static_cast<unsigned long long>(n), ser, par, ser / par,
                v_serial == v_parallel ? "equal" : "DIFFER");
  }
  return 0;
}
