#pragma once
#include <cstdint>
#include <functional>

#include "occu/errors.hpp"

namespace occu::num {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/** ln Gamma(z + d) - ln Gamma(z), computed without the catastrophic
 *  cancellation of subtracting two large lgamma values (z may be ~1e7
 *  while the ratio is moderate). */
double lgamma_ratio(double z, double d);

/** log of the binomial coefficient C(n, r). Uses an explicit product sum for
 *  small r so downstream exp() results keep ~1e-14 relative accuracy. */
double log_binom(std::uint64_t n, std::uint64_t r);

/** Lower incomplete gamma gamma(t, x) = int_0^x u^{t-1} e^{-u} du
 *  (unnormalized). Conventions: gamma(0, x>0) = +infinity, gamma(t, +inf) =
 *  Gamma(t). Series for x < t+1, continued fraction otherwise. */
double lower_incomplete_gamma(double t, double x);

/** Upper incomplete gamma Gamma(t, x) = Gamma(t) - gamma(t, x). */
double upper_incomplete_gamma(double t, double x);

/** Regularized incomplete beta I_x(a, b), a,b > 0, x in [0,1].
 *  Continued fraction with a Stirling-corrected prefactor so relative
 *  accuracy holds for a, b up to ~1e7. */
double regularized_incomplete_beta(double a, double b, double x);

/** int_a^b u^r (1 - c u)^m du, exact via the incomplete beta transform,
 *  c > 0, 0 <= a <= b <= 1/c. */
double kernel_integral(std::uint64_t r, std::uint64_t m, double c, double a, double b);

/** Real-exponent variant: int_a^b u^{t-1} (1 - c u)^m du, t > 0. */
double kernel_integral_real(double t, double m, double c, double a, double b);

/** Riemann zeta for s > 1 (Euler-Maclaurin). */
double riemann_zeta(double s);

/** sum_{k > m} k^{-s} for s > 1. */
double zeta_tail(double s, std::uint64_t m);

struct SlowlyVaryingSpec {
  enum class Form { constant, log_power };
  Form form = Form::constant;
  double C = 1.0;
  double gamma = 0.0;  // only for log_power: C * (log(e + x))^gamma

  double eval(double x) const;
};

/** ell-circle-beta transform: sqrt(int_{2x}^infinity ell(u)^2 u^{beta-2} du),
 *  beta in (0,1). Closed form for constant ell; bracketed quadrature with an
 *  incomplete-gamma tail sandwich for the log-power form (rel err <= 1e-8). */
double ell_circ_beta(const SlowlyVaryingSpec& ell, double beta, double x);

/** Recursive adaptive Simpson quadrature. */
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol, int max_depth = 60);

}  // namespace occu::num
