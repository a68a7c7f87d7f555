#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "occu/distribution.hpp"
#include "occu/exact.hpp"

namespace occu {

struct BoundCondition {
  std::string name;
  bool holds;
  std::string detail;
};

/** One evaluated bound. Inapplicable bounds carry the trivial value
 *  (+infinity upper, 0 lower) so suites stay total. `certified` is false when
 *  the bound depends on a placeholder constant. */
struct BoundResult {
  std::string source;
  bool is_upper = true;
  double value = 0.0;
  std::optional<double> optimizer_eps;
  bool applicable = true;
  bool certified = true;
  std::vector<BoundCondition> conditions;

  nlohmann::json to_json() const;
};

/** inf over eps in [0,1] of c(r) nu(eps)/n plus the saturated-kernel integral
 *  term with scale parameter b > 1; for r = n, the inf of
 *  p_star^{n+1} nu(eps) + eps^n. The infimum is exact: both objectives are
 *  piecewise monotone between breakpoints of nu, so a finite candidate sweep
 *  (atom values, their b-multiples, endpoints) suffices. */
BoundResult upper_split(const Distribution& d, std::uint64_t n, std::uint64_t r,
                        double b = 2.0);

/** c(r)|S|/n for r <= n-1 and p_star^{n+1}|S| for r = n; finite supports. */
BoundResult upper_support(const Distribution& d, std::uint64_t n, std::uint64_t r);

enum class EnvelopeVariant {
  direct,      // single closed-form constant; needs non-increasing ell
  two_term,    // adds a beta-indexed second term
  kappa_adjusted  // second term damped by the halving-ratio limit of nu
};

/** Closed-form rate bounds driven by an upper envelope
 *  nu(eps) <= eps^{-alpha} ell(1/eps) valid on (0,1]. */
BoundResult upper_envelope(const Distribution& d, std::uint64_t n, std::uint64_t r,
                           EnvelopeVariant variant,
                           std::optional<double> beta = std::nullopt);

/** inf over eps in (0, min(1/2, p_star/2)] of c(r) nu(eps)/n plus the
 *  doubling-ratio integral term driven by kappa_plus. Segment-exact sweep;
 *  for infinite supports the sub-horizon head is replaced by a certified
 *  upper bound, so the value stays a valid upper bound. */
BoundResult upper_doubling(const Distribution& d, std::uint64_t n, std::uint64_t r);

/** sup over eps in (0, 1/2] of C(n,r) nu(eps) eps^{r+1} (1-p_star)^{n-r} plus
 *  the kappa_minus integral term. Candidates are atom values and 1/2; the
 *  integral is segment-exact with a dropped (nonnegative) sub-horizon head,
 *  so the value stays a valid lower bound. */
BoundResult lower_split(const Distribution& d, std::uint64_t n, std::uint64_t r);

/** Closed-form rate lower bound from a lower envelope with non-decreasing ell
 *  and halving-ratio limit < 1, gated on three checkable conditions at n. */
BoundResult lower_envelope(const Distribution& d, std::uint64_t n, std::uint64_t r);

/** Missing-mass sandwich from the accrual function:
 *  sup (1-eps)^n F(eps) <= E M_{n,0} <= inf (1-eps)^n + F(eps),
 *  both optimized exactly over the breakpoint candidates. (lower, upper). */
std::pair<BoundResult, BoundResult> accrual_bounds(const Distribution& d, std::uint64_t n);

/** Coarse missing-mass upper bound: exp(-n/|S|) for n <= |S|, else |S|/(ne);
 *  infinite supports use (halving increment)/(c n) when that increment is
 *  finite, with c a placeholder constant (default 1, not certified). */
BoundResult upper_missing_mass(const Distribution& d, std::uint64_t n, double c = 1.0);

/** Missing-mass bounds assuming the two-sided power envelope
 *  c_minus eps^{-alpha} <= nu(eps) <= c_plus eps^{-alpha}, validated on a
 *  200-point log grid over (0, eps_hi]. The derivation only evaluates the
 *  envelope at scales up to max(1/n, (1-alpha) log(n)/n), so eps_hi may be
 *  lowered to that proof ceiling; validation failure or an insufficient
 *  ceiling makes both results inapplicable. (lower, upper). */
std::pair<BoundResult, BoundResult> accrual_powerlaw_bounds(double c_minus, double c_plus,
                                                            double alpha, std::uint64_t n,
                                                            const Distribution& d,
                                                            double eps_hi = 1.0);

/** Per-n certificate behind the scaling floor for infinite supports: pick the
 *  first atom with mass <= 1/n, set k = floor(1/mass), and certify
 *  k^{r+1}/C(n,r) E M_{n,r} >= (1-mass)(1-1/k)^k. */
struct ScalingFloor {
  std::uint64_t atom_rank = 0;  // 1-based rank of the chosen atom
  std::uint64_t k = 0;
  double floor_value = 0.0;
  double scaled_EM = 0.0;       // left side, evaluated through exact_EM
  bool holds = false;
};
ScalingFloor scaling_floor(const Distribution& d, std::uint64_t n, std::uint64_t r,
                           const ExactOptions& opts = {});

struct SuiteOptions {
  double b = 2.0;        // scale parameter of upper_split
  double coarse_c = 1.0; // placeholder constant of upper_missing_mass
  std::optional<double> beta;
  double slack = 1e-10;  // sandwich tolerance
  ExactOptions exact_opts;
};

struct BoundReport {
  std::string dist_label;
  nlohmann::json dist_config;
  std::uint64_t n = 0;
  std::uint64_t r = 0;
  ExactResult exact;
  std::vector<BoundResult> results;
  double tightest_upper = 0.0;
  std::string tightest_upper_source;
  double tightest_lower = 0.0;
  std::string tightest_lower_source;
  bool sandwich_ok = false;
  double slack = 1e-10;

  nlohmann::json to_json() const;
};

/** Evaluates every bound applicable at (d, n, r) plus the exact value, the
 *  tightest pair, and a sandwich verdict over all certified applicable
 *  results. */
BoundReport bound_suite(const Distribution& d, std::uint64_t n, std::uint64_t r,
                        const SuiteOptions& opts = {});

/** JSON encoding of an extended real (infinities become tagged strings). */
nlohmann::json json_real(double v);

}  // namespace occu
