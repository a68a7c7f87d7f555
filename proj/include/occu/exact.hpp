#pragma once
#include <cstdint>
#include <optional>
#include <vector>

#include "occu/distribution.hpp"

namespace occu {

struct ExactOptions {
  double tol = 1e-12;                  // relative truncation budget
  double abs_tol = 1e-15;              // absolute floor on the same budget
  std::uint64_t max_atoms = 10000000;  // head-sum cap before giving up
  bool serial = false;                 // force the serial summation kernel
};

/** A truncated sum with a certified enclosure: value lies in [lo, hi]. */
struct ExactResult {
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::uint64_t atoms_used = 0;

  double width() const { return hi - lo; }
};

/** E M_{n,r} = C(n,r) sum_a p_a^{1+r} (1-p_a)^{n-r}: expected probability
 *  mass of the cells hit exactly r times by an n-sample. */
ExactResult exact_EM(const Distribution& d, std::uint64_t n, std::uint64_t r,
                     const ExactOptions& opts = {});

/** E K_{n,r} = C(n,r) sum_a p_a^r (1-p_a)^{n-r}: expected number of cells hit
 *  exactly r times. r = 0 with infinite support yields +infinity. */
ExactResult exact_EK(const Distribution& d, std::uint64_t n, std::uint64_t r,
                     const ExactOptions& opts = {});

/** sum_a P(cell a hit >= r times) = sum_a I_{p_a}(r, n-r+1). For r = 0 this
 *  is the support size (+infinity when infinite). */
ExactResult exact_EK_atleast(const Distribution& d, std::uint64_t n, std::uint64_t r,
                             const ExactOptions& opts = {});

/** E M_{n,r} computed through the count/mass transfer
 *  E M_{n,r} = ((1+r)/(1+n)) E K_{n+1,r+1}. */
ExactResult exact_EM_via_transfer(const Distribution& d, std::uint64_t n, std::uint64_t r,
                                  const ExactOptions& opts = {});

/** E K_{n+1,r+1} from E M_{n,r}. */
double transfer_EM_to_EK(double em_value, std::uint64_t n, std::uint64_t r);

/** E M_{n-1,r-1} from E K_{n,r} (r >= 1). */
double transfer_EK_to_EM(double ek_value, std::uint64_t n, std::uint64_t r);

struct OccupancyProfile {
  struct Row {
    std::uint64_t r;
    double EM;
    double EK;  // +infinity for r = 0 on infinite support
  };
  std::uint64_t n;
  std::vector<Row> rows;       // r = 0..r_max
  double truncation_error;     // certified bound on total neglected mass
};

/** E M_{n,r} and E K_{n,r} for r = 0..r_max (default min(n, 20)). */
OccupancyProfile occupancy_profile(const Distribution& d, std::uint64_t n,
                                   std::optional<std::uint64_t> r_max = std::nullopt,
                                   const ExactOptions& opts = {});

enum class AsymptoticKind { counts, probabilities, poisson_probabilities };

/** Leading-order reference value under a counting function regularly varying
 *  with index alpha in (0,1):
 *    counts:        alpha Gamma(r-alpha)/r!   * scale^alpha     * ell_at
 *    probabilities: alpha Gamma(1+r-alpha)/r! * scale^(alpha-1) * ell_at
 *  (poisson_probabilities uses the probabilities display with scale = the
 *  mean accumulated intensity). Convergence target only, never a bound. */
double asymptotic_reference(double alpha, double ell_at, double scale, std::uint64_t r,
                            AsymptoticKind kind);

/** asymptotic_reference(probabilities) wired to the law's own envelope data. */
double asymptotic_EM(const Distribution& d, std::uint64_t n, std::uint64_t r);

}  // namespace occu
