#include "occu/numerics.hpp"

#include <cmath>
#include <limits>

namespace occu::num {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = std::numeric_limits<double>::min();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Stirling series correction: lnGamma(z) = (z-1/2)ln z - z + ln(2 pi)/2 + delta(z)
double stirling_delta(double z) {
  if (z < 10.0) {
    return std::lgamma(z) - ((z - 0.5) * std::log(z) - z + 0.5 * std::log(2.0 * kPi));
  }
  const double w = 1.0 / (z * z);
  // 1/12z - 1/360z^3 + 1/1260z^5 - 1/1680z^7 + 1/1188z^9
  return (((((1.0 / 1188.0) * w - 1.0 / 1680.0) * w + 1.0 / 1260.0) * w - 1.0 / 360.0) * w +
          1.0 / 12.0) /
         z;
}

// continued fraction for the upper incomplete gamma, x >= t+1 (Lentz)
double gamma_cf(double t, double x) {
  double b = x + 1.0 - t;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 100000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - t);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) <= kEps) return h;
  }
  throw precision_error("incomplete gamma continued fraction did not converge", 0.0);
}

// series for the lower incomplete gamma, x < t+1
double gamma_series(double t, double x) {
  double ap = t;
  double del = 1.0 / t;
  double sum = del;
  for (int i = 0; i < 100000; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps) return sum;
  }
  throw precision_error("incomplete gamma series did not converge", 0.0);
}

// log of x^a (1-x)^b / B(a,b), cancellation-safe for large a, b
double log_beta_prefactor(double a, double b, double x) {
  const double x0 = a / (a + b);
  const double y0 = b / (a + b);
  // a*ln(x/x0) + b*ln((1-x)/y0) - ln sqrt(2 pi (a+b) x0 y0) - corrections
  const double t1 = a * std::log1p((x - x0) / x0);
  const double t2 = b * std::log1p((x0 - x) / y0);
  const double t3 = -0.5 * std::log(2.0 * kPi * (a + b) / (a * b));
  return t1 + t2 + t3 - stirling_delta(a) - stirling_delta(b) + stirling_delta(a + b);
}

// Lentz evaluation of the standard incomplete beta continued fraction
double betacf(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 1000000; ++m) {
    const double md = static_cast<double>(m);
    const double m2 = 2.0 * md;
    double aa = md * (b - md) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + md) * (qab + md) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) <= 3.0 * kEps) return h;
  }
  throw precision_error("incomplete beta continued fraction did not converge", 0.0);
}

double simpson_rec(const std::function<double(double)>& f, double a, double fa, double m,
                   double fm, double b, double fb, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_rec(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double lgamma_ratio(double z, double d) {
  if (z <= 0.0 || z + d <= 0.0) throw domain_error("lgamma_ratio: arguments must be positive");
  if (z < 16.0) return std::lgamma(z + d) - std::lgamma(z);
  // (z-1/2) log1p(d/z) + d log(z+d) - d + delta(z+d) - delta(z)
  return (z - 0.5) * std::log1p(d / z) + d * std::log(z + d) - d + stirling_delta(z + d) -
         stirling_delta(z);
}

double log_binom(std::uint64_t n, std::uint64_t r) {
  if (r > n) throw domain_error("log_binom: r > n");
  std::uint64_t k = std::min(r, n - r);
  if (k == 0) return 0.0;
  if (k <= 1024) {
    double sum = 0.0, comp = 0.0;
    for (std::uint64_t i = 1; i <= k; ++i) {
      const double term = std::log(static_cast<double>(n - k + i)) - std::log(static_cast<double>(i));
      const double y = term - comp;
      const double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
    }
    return sum;
  }
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  return std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0);
}

double lower_incomplete_gamma(double t, double x) {
  if (t < 0.0 || x < 0.0 || std::isnan(t) || std::isnan(x)) {
    throw domain_error("lower_incomplete_gamma: need t >= 0, x >= 0");
  }
  if (t == 0.0) return x > 0.0 ? kInf : 0.0;
  if (t > 170.0) throw domain_error("lower_incomplete_gamma: t too large for unnormalized value");
  if (std::isinf(x)) return std::tgamma(t);
  if (x == 0.0) return 0.0;
  const double logpre = t * std::log(x) - x;
  if (x < t + 1.0) {
    return gamma_series(t, x) * std::exp(logpre);
  }
  return std::tgamma(t) - std::exp(logpre) * gamma_cf(t, x);
}

double upper_incomplete_gamma(double t, double x) {
  if (t <= 0.0 || x < 0.0) throw domain_error("upper_incomplete_gamma: need t > 0, x >= 0");
  if (t > 170.0) throw domain_error("upper_incomplete_gamma: t too large for unnormalized value");
  if (x == 0.0) return std::tgamma(t);
  if (std::isinf(x)) return 0.0;
  const double logpre = t * std::log(x) - x;
  if (x < t + 1.0) {
    return std::tgamma(t) - gamma_series(t, x) * std::exp(logpre);
  }
  return std::exp(logpre) * gamma_cf(t, x);
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw domain_error("regularized_incomplete_beta: need a, b > 0");
  if (std::isnan(x) || x < 0.0 || x > 1.0) {
    throw domain_error("regularized_incomplete_beta: need x in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  if (x < (a + 1.0) / (a + b + 2.0)) {
    const double bt = std::exp(log_beta_prefactor(a, b, x));
    return bt * betacf(a, b, x) / a;
  }
  const double bt = std::exp(log_beta_prefactor(b, a, 1.0 - x));
  const double res = 1.0 - bt * betacf(b, a, 1.0 - x) / b;
  return res < 0.0 ? 0.0 : res;
}

double kernel_integral(std::uint64_t r, std::uint64_t m, double c, double a, double b) {
  if (c <= 0.0) throw domain_error("kernel_integral: need c > 0");
  if (a < 0.0 || b < a || b > 1.0 / c + 1e-12 * (1.0 / c)) {
    throw domain_error("kernel_integral: need 0 <= a <= b <= 1/c");
  }
  const double rd = static_cast<double>(r);
  const double md = static_cast<double>(m);
  // log B(r+1, m+1) via the exact product r! / prod_{j=1..r+1} (m+j)
  double logB = std::lgamma(rd + 1.0);
  for (std::uint64_t j = 1; j <= r + 1; ++j) logB -= std::log(md + static_cast<double>(j));
  const double ca = std::min(c * a, 1.0);
  const double cb = std::min(c * b, 1.0);
  const double dI = regularized_incomplete_beta(rd + 1.0, md + 1.0, cb) -
                    regularized_incomplete_beta(rd + 1.0, md + 1.0, ca);
  return std::exp(-(rd + 1.0) * std::log(c) + logB) * dI;
}

double kernel_integral_real(double t, double m, double c, double a, double b) {
  if (c <= 0.0 || t <= 0.0) throw domain_error("kernel_integral_real: need c > 0, t > 0");
  if (a < 0.0 || b < a || c * b > 1.0 + 1e-12) {
    throw domain_error("kernel_integral_real: need 0 <= a <= b <= 1/c");
  }
  // B(t, m+1) = Gamma(t) / (Gamma(m+1+t)/Gamma(m+1))
  const double logB = std::lgamma(t) - lgamma_ratio(m + 1.0, t);
  const double ca = std::min(c * a, 1.0);
  const double cb = std::min(c * b, 1.0);
  const double dI = regularized_incomplete_beta(t, m + 1.0, cb) -
                    regularized_incomplete_beta(t, m + 1.0, ca);
  return std::exp(-t * std::log(c) + logB) * dI;
}

double zeta_tail(double s, std::uint64_t m) {
  if (s <= 1.0) throw domain_error("zeta_tail: need s > 1");
  double head = 0.0;
  std::uint64_t a = m + 1;
  while (a < 24) {  // push the Euler-Maclaurin point far enough out
    head += std::pow(static_cast<double>(a), -s);
    ++a;
  }
  const double ad = static_cast<double>(a);
  const double f = std::pow(ad, -s);
  double tail = ad * f / (s - 1.0);              // integral
  tail += 0.5 * f;                                // f(a)/2
  tail += s * f / ad / 12.0;                      // -f'(a)/12
  tail -= s * (s + 1.0) * (s + 2.0) * f / (ad * ad * ad) / 720.0;
  tail += s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * f /
          (ad * ad * ad * ad * ad) / 30240.0;
  return head + tail;
}

double riemann_zeta(double s) {
  if (s <= 1.0) throw domain_error("riemann_zeta: need s > 1");
  double sum = 0.0;
  for (std::uint64_t k = 1; k <= 23; ++k) sum += std::pow(static_cast<double>(k), -s);
  return sum + zeta_tail(s, 23);
}

double SlowlyVaryingSpec::eval(double x) const {
  switch (form) {
    case Form::constant:
      return C;
    case Form::log_power:
      return C * std::pow(std::log(std::exp(1.0) + x), gamma);
  }
  throw domain_error("SlowlyVaryingSpec: bad form");
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth) {
  if (!(a <= b)) throw domain_error("adaptive_simpson: need a <= b");
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, fa, m, fm, b, fb, whole, tol, max_depth);
}

double ell_circ_beta(const SlowlyVaryingSpec& ell, double beta, double x) {
  if (beta <= 0.0 || beta >= 1.0) throw domain_error("ell_circ_beta: need beta in (0,1)");
  if (x <= 0.0) throw domain_error("ell_circ_beta: need x > 0");
  if (ell.form == SlowlyVaryingSpec::Form::constant) {
    return ell.C * std::sqrt(std::pow(2.0 * x, beta - 1.0) / (1.0 - beta));
  }
  // log-power: bracketed quadrature. tail: int_U^inf (ln(c u))^{2g} u^{beta-2} du
  //   = c^{1-beta} (1-beta)^{-(2g+1)} UpperGamma(2g+1, (1-beta) ln(c U))
  const double g2 = 2.0 * ell.gamma;
  const double omb = 1.0 - beta;
  const auto tail_with = [&](double cc, double U) {
    const double w = omb * std::log(cc * U);
    return std::pow(cc, omb) * std::pow(omb, -(g2 + 1.0)) * upper_incomplete_gamma(g2 + 1.0, w);
  };
  const double lo = 2.0 * x;
  double U = std::max({lo * 4.0, 64.0, std::exp(1.0)});
  const auto integrand_logu = [&](double t) {
    const double u = std::exp(t);
    const double l = ell.eval(u);
    return l * l * std::pow(u, beta - 2.0) * u;
  };
  const double rough = adaptive_simpson(integrand_logu, std::log(lo), std::log(U), 1e-6) +
                       ell.C * ell.C * tail_with(1.0, U);
  for (int it = 0; it < 60; ++it) {
    const double tail_hi = ell.C * ell.C * tail_with(2.0, U);       // log(e+u) <= log(2u), u >= e
    const double tail_lo = ell.C * ell.C * tail_with(1.0, U);       // log(e+u) >= log(u)
    if (tail_hi - tail_lo <= 2e-9 * rough || tail_hi < 1e-300) {
      const double body = adaptive_simpson(integrand_logu, std::log(lo), std::log(U), 1e-11 * rough);
      return std::sqrt(body + 0.5 * (tail_hi + tail_lo));
    }
    U *= 4.0;
  }
  throw precision_error("ell_circ_beta: tail bracket did not close", 0.0);
}

}  // namespace occu::num
