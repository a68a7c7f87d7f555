#include "occu/exact.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "occu/kernels.hpp"
#include "occu/numerics.hpp"

namespace occu {

namespace {

constexpr std::uint64_t kStage0 = 4096;

struct TailBracket {
  double lo = 0.0;
  double hi = 0.0;
  bool certified = false;
};

/** log of C(n,r) p^a (1-p)^b with the b-term dropped when b == 0 so p = 1 is
 *  exact. */
double log_kernel_term(double lb, double a, std::uint64_t b, double p) {
  double v = lb + a * std::log(p);
  if (b > 0) v += static_cast<double>(b) * std::log1p(-p);
  return v;
}

/** Head sum over an explicit finite atom list: exact up to roundoff. */
ExactResult finite_sum(const Distribution& d, const ExactOptions& opts,
                       const std::function<double(double)>& weight) {
  const std::uint64_t nd = d.distinct_count();
  const auto f = [&](std::uint64_t i) {
    return static_cast<double>(d.multiplicity_of_distinct(i)) * weight(d.distinct_mass(i));
  };
  const double head =
      opts.serial ? kern::blocked_sum_serial(nd, f) : kern::blocked_sum(nd, f);
  return {head, head, head, d.support_size()};
}

/** Staged head+tail sum for infinite families. `term(k)` is the exact k-th
 *  summand (ranks are 1-based); `tail(K)` encloses the sum over ranks > K and
 *  reports whether its enclosure is rigorous at this K. */
ExactResult staged_sum(const ExactOptions& opts, const std::function<double(std::uint64_t)>& term,
                       const std::function<TailBracket(std::uint64_t)>& tail) {
  std::uint64_t K = std::min<std::uint64_t>(kStage0, opts.max_atoms);
  std::uint64_t done = 0;
  double estimate = 0.0;
  TailBracket br;
  while (true) {
    for (std::uint64_t k = done + 1; k <= K; ++k) estimate += term(k);
    done = K;
    br = tail(K);
    const double mid = 0.5 * (br.lo + br.hi);
    const double scale = std::max(estimate + mid, 1e-300);
    if (br.certified && br.hi - br.lo <= std::max(opts.tol * scale, opts.abs_tol)) break;
    if (K >= opts.max_atoms) {
      throw precision_error("truncation certificate not reached at max_atoms",
                            (br.hi - br.lo) / scale);
    }
    K = std::min(K * 2, opts.max_atoms);
  }
  const auto f = [&](std::uint64_t i) { return term(i + 1); };
  const double head = opts.serial ? kern::blocked_sum_serial(K, f) : kern::blocked_sum(K, f);
  return {head + 0.5 * (br.lo + br.hi), head + br.lo, head + br.hi, K};
}

/** Sums C(n,r) p_k^a (1-p_k)^{n-r} over the whole support with a certified
 *  tail (a = r for counts, a = r+1 for masses). */
ExactResult binomial_kernel_sum(const Distribution& d, std::uint64_t n, std::uint64_t r,
                                std::uint64_t a_int, const ExactOptions& opts) {
  const double lb = num::log_binom(n, r);
  const double a = static_cast<double>(a_int);
  const std::uint64_t b = n - r;
  const auto weight = [=](double p) { return std::exp(log_kernel_term(lb, a, b, p)); };
  if (d.finite_support()) return finite_sum(d, opts, weight);

  const auto term = [&, weight](std::uint64_t k) { return weight(d.mass_by_rank(k)); };

  if (d.family() == Family::zipf) {
    const double alpha = d.zipf_alpha();
    const double s = 1.0 / alpha;
    const double z = d.zipf_zeta();
    const double bd = static_cast<double>(b);
    // kernel is convex and decreasing in the continuous rank once
    // p/(1-p) <= a(as+1) / (b(2as+s+1))
    const double odds_cap =
        b == 0 ? 1.0 : a * (a * s + 1.0) / (bd * (2.0 * a * s + s + 1.0));
    const double ratio_cap = b == 0 ? 1.0 : odds_cap / (1.0 + odds_cap);
    // integral of the kernel over continuous ranks >= x0
    const double log_cb =
        lb + std::lgamma(a - alpha) - num::lgamma_ratio(static_cast<double>(b) + 1.0, a - alpha);
    const auto integral_from = [=](double x0) {
      const double w = std::min(1.0, std::pow(x0, -s) / z);
      return alpha * std::pow(z, -alpha) * std::exp(log_cb) *
             num::regularized_incomplete_beta(a - alpha, static_cast<double>(b) + 1.0, w);
    };
    const auto tail = [=, &d](std::uint64_t K) {
      const double A = static_cast<double>(K + 1);
      const double w_half = std::pow(A - 0.5, -s) / z;
      TailBracket out;
      out.certified = w_half <= ratio_cap;
      if (!out.certified) return out;
      out.lo = integral_from(A) + 0.5 * weight(d.mass_by_rank(K + 1));
      out.hi = integral_from(A - 0.5);
      return out;
    };
    return staged_sum(opts, term, tail);
  }

  // geometric: two-sided geometric-ratio envelope for the tail
  const double q = d.geometric_q();
  const auto tail = [=, &d](std::uint64_t K) {
    const double p1 = d.mass_by_rank(K + 1);
    const double t1 = weight(p1);
    const double rho_hi =
        std::pow(q, a) * std::exp(static_cast<double>(b) * p1 * (1.0 - q) / (1.0 - p1));
    const double rho_lo = std::pow(q, a);
    TailBracket out;
    out.certified = rho_hi < 1.0;
    if (!out.certified) return out;
    out.lo = t1 / (1.0 - rho_lo);  // term ratios sit in [rho_lo, rho_hi]
    out.hi = t1 / (1.0 - rho_hi);
    return out;
  };
  return staged_sum(opts, term, tail);
}

}  // namespace

ExactResult exact_EM(const Distribution& d, std::uint64_t n, std::uint64_t r,
                     const ExactOptions& opts) {
  if (r > n) throw domain_error("exact_EM: need r <= n");
  return binomial_kernel_sum(d, n, r, r + 1, opts);
}

ExactResult exact_EK(const Distribution& d, std::uint64_t n, std::uint64_t r,
                     const ExactOptions& opts) {
  if (r > n) throw domain_error("exact_EK: need r <= n");
  if (r == 0 && !d.finite_support()) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return {inf, inf, inf, 0};  // infinitely many unseen cells
  }
  return binomial_kernel_sum(d, n, r, r, opts);
}

ExactResult exact_EK_atleast(const Distribution& d, std::uint64_t n, std::uint64_t r,
                             const ExactOptions& opts) {
  if (r > n) throw domain_error("exact_EK_atleast: need r <= n");
  if (r == 0) {
    if (!d.finite_support()) {
      constexpr double inf = std::numeric_limits<double>::infinity();
      return {inf, inf, inf, 0};
    }
    const double s = static_cast<double>(d.support_size());
    return {s, s, s, d.support_size()};
  }
  const double a = static_cast<double>(r);
  const double bb = static_cast<double>(n - r) + 1.0;
  const auto weight = [=](double p) { return num::regularized_incomplete_beta(a, bb, p); };
  if (d.finite_support()) return finite_sum(d, opts, weight);

  const auto term = [&, weight](std::uint64_t k) { return weight(d.mass_by_rank(k)); };

  if (d.family() == Family::zipf) {
    const double alpha = d.zipf_alpha();
    const double s = 1.0 / alpha;
    const double z = d.zipf_zeta();
    // survival term is decreasing in the rank; convex once
    // p/(1-p) <= (s r + 1) / (s (n - r))
    const double raw_cap = n == r ? 1.0 : (s * a + 1.0) / (s * (static_cast<double>(n - r)));
    const double ratio_cap = n == r ? 1.0 : raw_cap / (1.0 + raw_cap);
    const double log_bratio =
        std::lgamma(a - alpha) - std::lgamma(a) +
        num::lgamma_ratio(static_cast<double>(n) + 1.0 - alpha, alpha);
    const auto integral_from = [=](double x0) {
      const double w = std::min(1.0, std::pow(x0, -s) / z);
      return std::pow(z, -alpha) *
             (std::exp(log_bratio) * num::regularized_incomplete_beta(a - alpha, bb, w) -
              std::pow(w, -alpha) * num::regularized_incomplete_beta(a, bb, w));
    };
    const auto tail = [=, &d](std::uint64_t K) {
      const double A = static_cast<double>(K + 1);
      const double w_half = std::pow(A - 0.5, -s) / z;
      TailBracket out;
      out.certified = w_half <= ratio_cap;
      if (!out.certified) return out;
      out.lo = integral_from(A) + 0.5 * weight(d.mass_by_rank(K + 1));
      out.hi = integral_from(A - 0.5);
      return out;
    };
    return staged_sum(opts, term, tail);
  }

  // geometric: P(Bin(n,p) >= r) <= C(n,r) p^r gives a closed-form upper tail
  const double q = d.geometric_q();
  const double lb = num::log_binom(n, r);
  const auto tail = [=, &d](std::uint64_t K) {
    const double log_hi = lb + a * std::log(1.0 - q) +
                          a * static_cast<double>(K) * std::log(q) -
                          std::log1p(-std::pow(q, a));
    TailBracket out;
    out.certified = true;
    out.lo = weight(d.mass_by_rank(K + 1));
    out.hi = std::exp(log_hi);
    if (out.hi < out.lo) out.hi = out.lo;  // roundoff guard; bounds cross only at underflow
    return out;
  };
  return staged_sum(opts, term, tail);
}

ExactResult exact_EM_via_transfer(const Distribution& d, std::uint64_t n, std::uint64_t r,
                                  const ExactOptions& opts) {
  if (r > n) throw domain_error("exact_EM_via_transfer: need r <= n");
  ExactResult base = exact_EK(d, n + 1, r + 1, opts);
  const double f = static_cast<double>(r + 1) / static_cast<double>(n + 1);
  return {f * base.value, f * base.lo, f * base.hi, base.atoms_used};
}

double transfer_EM_to_EK(double em_value, std::uint64_t n, std::uint64_t r) {
  if (r > n) throw domain_error("transfer_EM_to_EK: need r <= n");
  return em_value * static_cast<double>(n + 1) / static_cast<double>(r + 1);
}

double transfer_EK_to_EM(double ek_value, std::uint64_t n, std::uint64_t r) {
  if (r < 1 || r > n) throw domain_error("transfer_EK_to_EM: need 1 <= r <= n");
  return ek_value * static_cast<double>(r) / static_cast<double>(n);
}

OccupancyProfile occupancy_profile(const Distribution& d, std::uint64_t n,
                                   std::optional<std::uint64_t> r_max, const ExactOptions& opts) {
  const std::uint64_t rm = r_max.value_or(std::min<std::uint64_t>(n, 20));
  if (rm > n) throw domain_error("occupancy_profile: need r_max <= n");
  OccupancyProfile prof;
  prof.n = n;
  prof.truncation_error = 0.0;
  prof.rows.reserve(rm + 1);
  for (std::uint64_t r = 0; r <= rm; ++r) {
    const ExactResult em = exact_EM(d, n, r, opts);
    const ExactResult ek = exact_EK(d, n, r, opts);
    prof.rows.push_back({r, em.value, ek.value});
    prof.truncation_error += em.width();
  }
  return prof;
}

double asymptotic_reference(double alpha, double ell_at, double scale, std::uint64_t r,
                            AsymptoticKind kind) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw domain_error("asymptotic_reference: need alpha in (0,1)");
  }
  const double rd = static_cast<double>(r);
  if (kind == AsymptoticKind::counts) {
    if (r == 0) throw domain_error("asymptotic_reference: counts need r >= 1");
    return alpha * std::exp(std::lgamma(rd - alpha) - std::lgamma(rd + 1.0)) *
           std::pow(scale, alpha) * ell_at;
  }
  return alpha * std::exp(std::lgamma(1.0 + rd - alpha) - std::lgamma(rd + 1.0)) *
         std::pow(scale, alpha - 1.0) * ell_at;
}

double asymptotic_EM(const Distribution& d, std::uint64_t n, std::uint64_t r) {
  if (d.family() != Family::zipf) {
    throw domain_error("asymptotic_EM: needs a law with positive regular-variation index");
  }
  const double alpha = d.zipf_alpha();
  return asymptotic_reference(alpha, std::pow(d.zipf_zeta(), -alpha),
                              static_cast<double>(n), r, AsymptoticKind::probabilities);
}

}  // namespace occu
