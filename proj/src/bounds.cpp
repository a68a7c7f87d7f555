#include "occu/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <tuple>
#include <vector>

#include "occu/errors.hpp"
#include "occu/numerics.hpp"

namespace occu {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double c_of_r(std::uint64_t r) {
  if (r == 0) return std::exp(-1.0);
  return std::exp(1.0) * (1.0 + static_cast<double>(r)) / std::sqrt(num::kPi);
}

double next_up(double x) { return std::nextafter(x, 2.0); }

std::string str(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

BoundResult base(const char* source, bool is_upper) {
  BoundResult b;
  b.source = source;
  b.is_upper = is_upper;
  b.value = is_upper ? kInf : 0.0;
  return b;
}

bool require(BoundResult& b, bool holds, const std::string& name, const std::string& detail) {
  b.conditions.push_back({name, holds, detail});
  if (!holds) {
    b.applicable = false;
    b.value = b.is_upper ? kInf : 0.0;
    b.optimizer_eps.reset();
  }
  return holds;
}

double ibeta_rn(std::uint64_t n, std::uint64_t r, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return num::regularized_incomplete_beta(static_cast<double>(r) + 1.0,
                                          static_cast<double>(n - r) + 1.0, x);
}

/** C(n,r) * int_a^b u^r (1 - c u)^{n-r} du for 0 <= a <= b <= 1/c, evaluated
 *  through the incomplete-beta CDF so huge binomial factors never appear. */
double binom_block(std::uint64_t n, std::uint64_t r, double c, double a, double b) {
  if (!(b > a)) return 0.0;
  const double diff = ibeta_rn(n, r, c * b) - ibeta_rn(n, r, c * a);
  if (diff <= 0.0) return 0.0;
  return diff * std::exp(-(static_cast<double>(r) + 1.0) * std::log(c)) /
         (static_cast<double>(n) + 1.0);
}

double pow1m(double p, std::uint64_t e) {  // (1 - p)^e
  if (e == 0) return 1.0;
  if (p >= 1.0) return 0.0;
  return std::exp(static_cast<double>(e) * std::log1p(-p));
}

double ratio_conv(std::uint64_t num_, std::uint64_t den) {
  if (den == 0) return num_ == 0 ? 1.0 : kInf;
  return static_cast<double>(num_) / static_cast<double>(den);
}

struct Bp {
  double x;
  std::uint64_t rank;  // atom rank, 0 for half-points and terminals
};

/** Breakpoints of the kappa integrands inside (lo, hi]: atom values and
 *  half atom values, ascending. Infinite families only. */
std::vector<Bp> kappa_breakpoints(const Distribution& d, double lo, double hi) {
  std::vector<Bp> v;
  const std::uint64_t a0 = d.counting_nu(next_up(hi)) + 1;  // first atom <= hi
  const std::uint64_t a1 = d.counting_nu(next_up(lo));      // last atom > lo
  for (std::uint64_t k = a0; k <= a1; ++k) v.push_back({d.mass_by_rank(k), k});
  const std::uint64_t h0 = d.counting_nu(next_up(std::min(1.0, 2.0 * hi))) + 1;
  const std::uint64_t h1 = d.counting_nu(next_up(2.0 * lo));
  for (std::uint64_t k = h0; k <= h1; ++k) {
    const double x = 0.5 * d.mass_by_rank(k);
    if (x > lo && x <= hi) v.push_back({x, 0});
  }
  std::sort(v.begin(), v.end(), [](const Bp& p, const Bp& q) { return p.x < q.x; });
  return v;
}

/** Deepest geometric rank kept in sweeps (masses below ~1e-250 contribute
 *  nothing at double precision). */
std::uint64_t geometric_rank_cap(const Distribution& d) {
  const double q = d.geometric_q();
  const double k = 1.0 + (std::log(1e-250) - std::log1p(-q)) / std::log(q);
  return k < 2.0 ? 2 : static_cast<std::uint64_t>(k);
}

}  // namespace

nlohmann::json json_real(double v) {
  if (std::isnan(v)) return nlohmann::json("nan");
  if (std::isinf(v)) return nlohmann::json(v > 0 ? "infinity" : "-infinity");
  return nlohmann::json(v);
}

BoundResult upper_split(const Distribution& d, std::uint64_t n, std::uint64_t r, double b) {
  if (n < 1) throw domain_error("upper_split: need n >= 1");
  if (r > n) throw domain_error("upper_split: need r <= n");
  if (!(b > 1.0)) throw domain_error("upper_split: need b > 1");
  BoundResult out = base("split", true);
  const double nd = static_cast<double>(n);

  if (r == n) {
    // inf over eps of p_star^{n+1} nu(eps) + eps^n
    const double pw = std::exp((nd + 1.0) * std::log(d.p_star()));
    double best = pw * static_cast<double>(d.counting_nu(1.0)) + 1.0;
    double best_eps = 1.0;
    auto try_point = [&](double eps, double nu_right) {
      const double v = pw * nu_right + (eps > 0.0 ? std::exp(nd * std::log(eps)) : 0.0);
      if (v < best) {
        best = v;
        best_eps = eps;
      }
    };
    if (d.finite_support()) {
      try_point(0.0, static_cast<double>(d.support_size()));
      double above = 0.0;
      for (std::uint64_t i = 0; i < d.distinct_count(); ++i) {
        const double v = d.distinct_mass(i);
        if (v < 1.0) try_point(v, above);
        above += static_cast<double>(d.multiplicity_of_distinct(i));
      }
    } else {
      for (std::uint64_t k = 1;; ++k) {
        const double pk = d.mass_by_rank(k);
        if (pk <= 0.0) break;
        if (pk < 1.0) try_point(pk, static_cast<double>(k - 1));
        if (pw * static_cast<double>(k) >= best) break;
      }
    }
    out.value = best;
    out.optimizer_eps = best_eps;
    return out;
  }

  const double cr = c_of_r(r);
  const double pref = std::pow(b, 2.0 * static_cast<double>(r) + 2.0) / ((b - 1.0) * (nd + 1.0));
  auto Ib = [&](double x) { return ibeta_rn(n, r, x); };
  auto phi = [&](double nu) { return cr * nu / nd; };

  if (d.finite_support()) {
    const std::uint64_t D = d.distinct_count();
    auto psi = [&](double eps) {
      double s = 0.0;
      for (std::uint64_t i = 0; i < D; ++i) {
        s += static_cast<double>(d.multiplicity_of_distinct(i)) *
             Ib(std::min(eps / b, d.distinct_mass(i)));
      }
      return pref * s;
    };
    double best = phi(static_cast<double>(d.support_size()));  // eps -> 0+
    double best_eps = 0.0;
    auto try_point = [&](double eps, double nu) {
      const double v = phi(nu) + psi(eps);
      if (v < best) {
        best = v;
        best_eps = eps;
      }
    };
    try_point(1.0, static_cast<double>(d.counting_nu(1.0)));
    std::vector<double> cand;
    for (std::uint64_t i = 0; i < D; ++i) {
      const double v = d.distinct_mass(i);
      if (v < 1.0) cand.push_back(v);
      if (b * v < 1.0) cand.push_back(b * v);
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    for (double c : cand) try_point(c, static_cast<double>(d.counting_nu(next_up(c))));
    out.value = best;
    out.optimizer_eps = best_eps;
    return out;
  }

  // Infinite support: suffix sums of I_{p_k}(r+1, n-r+1) come from the
  // certified total sum_a I_{p_a} minus a lazily extended prefix.
  const double total_I = exact_EK_atleast(d, n + 1, r + 1).value;
  std::vector<double> prefix{0.0};
  auto extend_prefix = [&](std::uint64_t k) {
    while (prefix.size() <= k) {
      const std::uint64_t rank = prefix.size();
      prefix.push_back(prefix.back() + Ib(d.mass_by_rank(rank)));
    }
  };
  auto value_at = [&](double eps, double nu_right) {
    const double w = eps / b;
    const std::uint64_t gt = d.counting_nu(next_up(w));  // atoms > w
    extend_prefix(gt);
    double suffix = total_I - prefix[gt];
    if (suffix < 0.0) suffix = 0.0;
    return phi(nu_right) + pref * (static_cast<double>(gt) * Ib(w) + suffix);
  };

  double best = value_at(1.0, static_cast<double>(d.counting_nu(1.0)));
  double best_eps = 1.0;
  std::uint64_t ka = 1, kb = 1;
  while (true) {
    const double pa = d.mass_by_rank(ka);
    double sc = b * d.mass_by_rank(kb);
    while (sc >= 1.0) {
      ++kb;
      sc = b * d.mass_by_rank(kb);
    }
    const double c = std::max(pa, sc);
    if (!(c > 0.0)) break;
    const double v = value_at(c, static_cast<double>(d.counting_nu(next_up(c))));
    if (v < best) {
      best = v;
      best_eps = c;
    }
    // every eps <= c sees nu(eps) >= nu(c)
    if (phi(static_cast<double>(d.counting_nu(c))) >= best) break;
    if (pa >= sc) ++ka;
    if (sc >= pa) ++kb;
  }
  out.value = best;
  out.optimizer_eps = best_eps;
  return out;
}

BoundResult upper_support(const Distribution& d, std::uint64_t n, std::uint64_t r) {
  if (n < 1) throw domain_error("upper_support: need n >= 1");
  if (r > n) throw domain_error("upper_support: need r <= n");
  BoundResult out = base("support", true);
  if (!require(out, d.finite_support(), "finite support",
               d.finite_support() ? "" : d.label() + " has infinite support"))
    return out;
  const double S = static_cast<double>(d.support_size());
  if (r <= n - 1) {
    out.value = c_of_r(r) * S / static_cast<double>(n);
  } else {
    out.value = std::exp((static_cast<double>(n) + 1.0) * std::log(d.p_star()) + std::log(S));
  }
  return out;
}

BoundResult upper_envelope(const Distribution& d, std::uint64_t n, std::uint64_t r,
                           EnvelopeVariant variant, std::optional<double> beta_opt) {
  if (n < 2) throw domain_error("upper_envelope: need n >= 2");
  if (r + 1 > n) throw domain_error("upper_envelope: need r <= n-1");
  const char* src = variant == EnvelopeVariant::direct ? "envelope_direct"
                    : variant == EnvelopeVariant::two_term ? "envelope_two_term"
                                                           : "envelope_kappa";
  BoundResult out = base(src, true);
  const auto env = d.rv_envelope(RVEnvelope::Side::upper);
  if (!require(out, env.has_value(), "upper envelope available",
               env ? "" : "no upper counting envelope known for " + d.label()))
    return out;
  if (!require(out, env->valid_from_epsilon >= 1.0, "envelope valid on (0,1]",
               "certified for eps <= " + str(env->valid_from_epsilon)))
    return out;
  const double alpha = env->alpha;
  const double rd = static_cast<double>(r);
  if (!require(out, alpha <= rd + 1.0, "envelope index at most r+1", "alpha = " + str(alpha)))
    return out;
  const double nd = static_cast<double>(n);
  const double elln = env->ell.eval(nd);
  const double lpow4 = (rd + 1.0) * std::log(4.0) - std::lgamma(rd + 1.0);  // 4^{1+r}/r!

  if (variant == EnvelopeVariant::direct) {
    const bool mono = env->ell.form == num::SlowlyVaryingSpec::Form::constant ||
                      env->ell.gamma <= 0.0;
    if (!require(out, mono, "slowly varying factor non-increasing",
                 mono ? "" : "log exponent " + str(env->ell.gamma) + " > 0"))
      return out;
    const double g = num::lower_incomplete_gamma(1.0 + rd - alpha, 0.5);
    const double c1 =
        c_of_r(r) + std::exp(lpow4) * std::pow(1.0 + rd, 1.0 + rd - alpha) * g;
    out.value = c1 * std::pow(nd, alpha - 1.0) * elln;
    return out;
  }

  const double beta_min = 2.0 * (alpha - rd) - 1.0;
  const double beta = beta_opt ? *beta_opt : std::max(0.5, 0.5 * (beta_min + 1.0));
  if (!require(out, beta > beta_min && beta > 0.0 && beta < 1.0, "beta admissible",
               "beta = " + str(beta) + ", needs max(0, " + str(beta_min) + ") < beta < 1"))
    return out;
  const double c2 = std::exp(lpow4) *
                    std::pow((1.0 + rd) / 2.0, 0.5 * (1.0 + beta) + rd - alpha) *
                    std::sqrt(num::lower_incomplete_gamma(1.0 + beta + 2.0 * (rd - alpha), 1.0));

  if (variant == EnvelopeVariant::two_term) {
    out.value = c_of_r(r) * std::pow(nd, alpha - 1.0) * elln +
                c2 * std::pow(nd, alpha - 0.5 * (1.0 + beta)) *
                    num::ell_circ_beta(env->ell, beta, nd);
    return out;
  }

  const double k0 = kappa_limit(d, true);
  if (!require(out, k0 > 1.0 && k0 <= 2.0, "doubling limit in (1,2]",
               "limit of nu(u/2)/nu(u) is " + str(k0)))
    return out;
  if (!require(out, std::fabs(std::pow(2.0, alpha) - k0) <= 1e-9 * k0,
               "envelope index matches the doubling limit",
               "2^alpha = " + str(std::pow(2.0, alpha)) + " vs " + str(k0)))
    return out;
  const double kn = kappa(d, true, 2.0 / nd);
  if (!require(out, kn <= 2.0 * k0 - 1.0, "doubling ratio condition at 2/n",
               "kappa_plus(2/n) = " + str(kn) + ", threshold " + str(2.0 * k0 - 1.0)))
    return out;
  out.value = c_of_r(r) * std::pow(nd, alpha - 1.0) * elln +
              (k0 - 1.0) * c2 * std::pow(0.5 * nd, alpha - 0.5 * (1.0 + beta)) *
                  num::ell_circ_beta(env->ell, beta, 0.5 * nd);
  return out;
}

BoundResult upper_doubling(const Distribution& d, std::uint64_t n, std::uint64_t r) {
  if (n < 1) throw domain_error("upper_doubling: need n >= 1");
  if (r + 1 > n) throw domain_error("upper_doubling: need r <= n-1");
  BoundResult out = base("doubling", true);
  const double nd = static_cast<double>(n);
  const double E = std::min(0.5, 0.5 * d.p_star());
  const double cr = c_of_r(r);
  const double scale = std::pow(2.0, static_cast<double>(r) + 1.0);

  if (d.finite_support()) {
    const std::uint64_t D = d.distinct_count();
    std::vector<Bp> bps;
    for (std::uint64_t i = 0; i < D; ++i) {
      const double v = d.distinct_mass(i);
      if (v < E) bps.push_back({v, i + 1});  // rank field marks "atom" here
      if (0.5 * v < E) bps.push_back({0.5 * v, 0});
    }
    bps.push_back({E, 0});
    std::sort(bps.begin(), bps.end(), [](const Bp& p, const Bp& q) { return p.x < q.x; });

    double best = cr * static_cast<double>(d.support_size()) / nd;  // eps -> 0+
    double best_eps = 0.0;
    double a = 0.0, kap = 1.0, theta = 0.0;
    for (const Bp& bp : bps) {
      const std::uint64_t nub = d.counting_nu(bp.x);
      const std::uint64_t nu2b = 2.0 * bp.x > 1.0 ? 0 : d.counting_nu(2.0 * bp.x);
      kap = std::max(kap, ratio_conv(nub, nu2b));
      if (kap > 1.0 && nub > 0) {
        theta += scale * (kap - 1.0) * static_cast<double>(nub) *
                 binom_block(n, r, 0.5, a, bp.x);
      }
      const double nu_cand =
          bp.rank > 0 ? static_cast<double>(d.counting_nu(next_up(bp.x)))
                      : (bp.x == E ? static_cast<double>(d.counting_nu(E)) : -1.0);
      if (nu_cand >= 0.0) {
        const double v = cr * nu_cand / nd + theta;
        if (v < best) {
          best = v;
          best_eps = bp.x;
        }
      }
      a = bp.x;
    }
    out.value = best;
    out.optimizer_eps = best_eps;
    return out;
  }

  const bool is_zipf = d.family() == Family::zipf;
  const std::uint64_t k_top = d.counting_nu(next_up(E)) + 1;  // first atom <= E
  const double p_top = d.mass_by_rank(k_top);
  std::uint64_t cap = is_zipf ? (std::uint64_t{1} << 22) : geometric_rank_cap(d);

  auto run = [&](std::uint64_t K) {
    const double pK = d.mass_by_rank(K);
    const double h = 0.5 * pK;
    double kap, head;
    if (is_zipf) {
      const double alpha = d.zipf_alpha();
      const double zma = std::pow(d.zipf_zeta(), -alpha);
      const double Y = static_cast<double>(K);  // (z * 2h)^{-alpha} exactly
      kap = std::pow(2.0, alpha) * Y / (Y - 1.0);
      const std::uint64_t K2 = d.counting_nu(next_up(h));
      const double pK2 = d.mass_by_rank(K2);
      auto J = [&](double x) { return num::kernel_integral(r, n - r, 0.5, 0.0, x); };
      double tail = zma * num::kernel_integral_real(static_cast<double>(r) + 1.0 - alpha,
                                                    static_cast<double>(n - r), 0.5, 0.0, pK2) -
                    static_cast<double>(K2) * J(pK2);
      if (tail < 0.0) tail = 0.0;
      const double M_hi = static_cast<double>(K2) * J(h) + tail;
      head = scale * std::exp(num::log_binom(n, r)) * (kap - 1.0) * M_hi;
    } else {
      const double q = d.geometric_q();
      const double L = std::log(1.0 / q);
      const double A0 = 1.0 + std::log(d.p_star()) / L;
      const double rp1 = static_cast<double>(r) + 1.0;
      const double envM =
          std::max(A0, 0.0) * num::kernel_integral(r, n - r, 0.5, 0.0, h) +
          std::pow(h, rp1) * (std::log(1.0 / h) / rp1 + 1.0 / (rp1 * rp1)) / L;
      kap = 1.0 + L_P(d) / static_cast<double>(K);
      head = scale * std::exp(num::log_binom(n, r)) * (kap - 1.0) * envM;
    }
    double theta = head, a = h;
    double best = kInf, best_eps = 0.0;
    const auto bps = kappa_breakpoints(d, h, p_top);
    std::uint64_t ranks = 0;
    for (const Bp& bp : bps) {
      const std::uint64_t nub = d.counting_nu(bp.x);
      const std::uint64_t nu2b = 2.0 * bp.x > 1.0 ? 0 : d.counting_nu(2.0 * bp.x);
      kap = std::max(kap, ratio_conv(nub, nu2b));
      if (kap > 1.0 && nub > 0) {
        theta += scale * (kap - 1.0) * static_cast<double>(nub) *
                 binom_block(n, r, 0.5, a, bp.x);
      }
      if (bp.rank > 0) {
        ranks = std::max(ranks, bp.rank);
        const double nu_cand =
            bp.x < E ? static_cast<double>(bp.rank - 1) : static_cast<double>(bp.rank);
        const double v = cr * nu_cand / nd + theta;
        if (v < best) {
          best = v;
          best_eps = bp.x;
        }
      }
      a = bp.x;
    }
    return std::tuple<double, double, std::uint64_t>{best, best_eps, ranks};
  };

  std::uint64_t K = std::min<std::uint64_t>(std::max<std::uint64_t>(16384, k_top + 64), cap);
  double best = kInf, best_eps = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    auto [v, eps, ranks] = run(K);
    best = v;
    best_eps = eps;
    const double kstar = 1.0 + nd * best / cr;
    if (K >= cap || static_cast<double>(ranks) >= kstar) break;
    K = std::min<std::uint64_t>(cap, std::max(2 * K, static_cast<std::uint64_t>(2.0 * kstar)));
  }
  out.value = best;
  out.optimizer_eps = best_eps;
  return out;
}

BoundResult lower_split(const Distribution& d, std::uint64_t n, std::uint64_t r) {
  if (n < 1) throw domain_error("lower_split: need n >= 1");
  if (r + 1 > n) throw domain_error("lower_split: need r <= n-1");
  BoundResult out = base("lower_split", false);
  const double nd = static_cast<double>(n);
  const double pst = d.p_star();
  const double lb = num::log_binom(n, r);
  auto phi = [&](double v, std::uint64_t nu) {
    if (nu == 0) return 0.0;
    if (pst >= 1.0) return 0.0;  // r <= n-1, so the (1-p_star) power is real
    return std::exp(lb + (static_cast<double>(r) + 1.0) * std::log(v) +
                    std::log(static_cast<double>(nu)) +
                    (nd - static_cast<double>(r)) * std::log1p(-pst));
  };

  double best = phi(0.5, d.counting_nu(0.5));
  double best_eps = 0.5;

  if (d.finite_support()) {
    for (std::uint64_t i = 0; i < d.distinct_count(); ++i) {
      const double v = d.distinct_mass(i);
      if (v > 0.5) continue;
      const double val = phi(v, d.counting_nu(v));
      if (val > best) {
        best = val;
        best_eps = v;
      }
    }
    out.value = best;
    out.optimizer_eps = best_eps;
    return out;
  }

  if (d.family() == Family::geometric) {
    // kappa_minus is identically 1 here, so only the counting term remains.
    const double L = std::log(1.0 / d.geometric_q());
    const std::uint64_t k_prune = static_cast<std::uint64_t>(1.0 / L) + 1;
    for (std::uint64_t k = 1; k <= 2000000; ++k) {
      const double pk = d.mass_by_rank(k);
      if (pk <= 0.0) break;
      if (pk > 0.5) continue;
      const double val = phi(pk, k);
      if (val > best) {
        best = val;
        best_eps = pk;
      } else if (k >= k_prune) {
        break;  // k p_k^{r+1} is decreasing from here on
      }
    }
    out.value = best;
    out.optimizer_eps = best_eps;
    return out;
  }

  // zipf: counting term plus the halving-ratio integral term, swept
  // segment-exactly above a deep horizon; the dropped head is replaced by a
  // certified lower bound, so the result stays a valid lower bound.
  const double alpha = d.zipf_alpha();
  const double zma = std::pow(d.zipf_zeta(), -alpha);
  const std::uint64_t K = 16384;
  const double h = 0.5 * d.mass_by_rank(K);
  const double scale = std::pow(2.0, -static_cast<double>(r));
  const double pow2a = std::pow(2.0, alpha);

  const double Y = static_cast<double>(K);
  double kap = std::min(1.0, Y / (pow2a * Y - 1.0));
  const std::uint64_t K2 = d.counting_nu(next_up(h));
  auto J = [&](double x) { return num::kernel_integral(r, n - r, 2.0, 0.0, x); };
  const double pK2n = d.mass_by_rank(K2 + 1);
  double tail = zma * num::kernel_integral_real(static_cast<double>(r) + 1.0 - alpha,
                                                static_cast<double>(n - r), 2.0, 0.0, pK2n) -
                static_cast<double>(K2 + 1) * J(pK2n);
  if (tail < 0.0) tail = 0.0;
  const double M_lo = static_cast<double>(K2) * J(h) + tail;
  double theta = scale * std::exp(lb) * (1.0 - kap) * M_lo;

  double a = h;
  for (const Bp& bp : kappa_breakpoints(d, h, 0.5)) {
    const std::uint64_t nub = d.counting_nu(bp.x);
    const std::uint64_t nu2b = 2.0 * bp.x > 1.0 ? 0 : d.counting_nu(2.0 * bp.x);
    kap = std::max(kap, ratio_conv(nu2b, nub));
    if (kap < 1.0 && nub > 0) {
      theta += scale * (1.0 - kap) * static_cast<double>(nub) *
               binom_block(n, r, 2.0, a, bp.x);
    }
    if (bp.rank > 0) {
      const double val = phi(bp.x, bp.rank) + theta;
      if (val > best) {
        best = val;
        best_eps = bp.x;
      }
    }
    a = bp.x;
  }
  // terminal candidate at 1/2 with the full integral term
  if (a < 0.5) {
    const std::uint64_t nub = d.counting_nu(0.5);
    kap = std::max(kap, ratio_conv(d.counting_nu(1.0), nub));
    if (kap < 1.0 && nub > 0) {
      theta += scale * (1.0 - kap) * static_cast<double>(nub) * binom_block(n, r, 2.0, a, 0.5);
    }
    const double val = phi(0.5, nub) + theta;
    if (val > best) {
      best = val;
      best_eps = 0.5;
    }
  }
  out.value = best;
  out.optimizer_eps = best_eps;
  return out;
}

BoundResult lower_envelope(const Distribution& d, std::uint64_t n, std::uint64_t r) {
  if (n < 1) throw domain_error("lower_envelope: need n >= 1");
  if (r > n) throw domain_error("lower_envelope: need r <= n");
  BoundResult out = base("lower_envelope", false);
  const double nd = static_cast<double>(n);
  const double rd = static_cast<double>(r);

  const auto env = d.rv_envelope(RVEnvelope::Side::lower);
  if (!require(out, env.has_value(), "lower envelope available",
               env ? "" : "no lower counting envelope known for " + d.label()))
    return out;
  const double alpha = env->alpha;
  if (!require(out, alpha > 0.0 && alpha < 1.0, "envelope index in (0,1)",
               "alpha = " + str(alpha)))
    return out;
  const bool mono = env->ell.form == num::SlowlyVaryingSpec::Form::constant ||
                    env->ell.gamma >= 0.0;
  if (!require(out, mono, "slowly varying factor non-decreasing",
               mono ? "" : "log exponent " + str(env->ell.gamma) + " < 0"))
    return out;
  const double k0 = kappa_limit(d, false);
  if (!require(out, k0 < 1.0, "halving limit below 1",
               "limit of nu(u)/nu(u/2) is " + str(k0)))
    return out;

  bool a_ok = false;
  std::string a_detail = "scale 2/n exceeds 1";
  if (n >= 2) {
    const double kn = kappa(d, false, 2.0 / nd);
    a_ok = kn <= 0.5 * (1.0 + k0);
    a_detail = "kappa_minus(2/n) = " + str(kn) + ", threshold " + str(0.5 * (1.0 + k0));
  }
  require(out, a_ok, "halving ratio condition at 2/n", a_detail);

  const double moment = r == 0 ? 1.0 : pow1m(rd / nd, n);
  require(out, moment >= 0.5 * std::exp(-rd), "kernel mass condition",
          "(1-r/n)^n = " + str(moment) + ", threshold " + str(0.5 * std::exp(-rd)));

  bool c_ok = false;
  std::string c_detail = "need n >= 2";
  if (n >= 2) {
    const double t = 1e-3;
    const double head = std::exp(nd * std::log1p(-t / nd)) *
                        std::pow(t, rd + 1.0 - alpha) / (rd + 1.0 - alpha);
    const double rest = num::adaptive_simpson(
        [&](double u) {
          return std::pow(u, rd - alpha) * std::exp(nd * std::log1p(-u / nd));
        },
        t, 2.0, 1e-9);
    const double need = 0.5 * num::lower_incomplete_gamma(1.0 + rd - alpha, 2.0);
    c_ok = head + rest >= need;
    c_detail = "integral >= " + str(head + rest) + ", threshold " + str(need);
  }
  require(out, c_ok, "truncated moment condition", c_detail);

  require(out, n >= 2 && 2.0 / nd <= env->valid_from_epsilon, "envelope valid at scale 2/n",
          "envelope certified for eps <= " + str(env->valid_from_epsilon) +
              ", need " + str(2.0 / nd));
  if (!out.applicable) return out;

  const double g2 = num::lower_incomplete_gamma(1.0 + rd - alpha, 2.0);
  const double bracket =
      pow1m(d.p_star(), n) +
      (1.0 - k0) * g2 / (std::pow(2.0, 1.0 - alpha) * std::pow(4.0, rd + 1.0));
  out.value = std::exp(-rd) / (2.0 * std::exp(std::lgamma(rd + 1.0))) * bracket *
              env->ell.eval(nd) / std::pow(nd, 1.0 - alpha);
  return out;
}

std::pair<BoundResult, BoundResult> accrual_bounds(const Distribution& d, std::uint64_t n) {
  if (n < 1) throw domain_error("accrual_bounds: need n >= 1");
  BoundResult lo = base("accrual_lower", false);
  BoundResult up = base("accrual_upper", true);

  double bl = 0.0, bl_eps = 0.0;
  double bu = d.p_star() == 1.0 ? 0.0 : 1.0;  // eps = 1: all mass accrued except an atom at 1
  double bu_eps = 1.0;

  if (d.finite_support()) {
    std::uint64_t above = 0;  // atoms strictly heavier than the current value
    for (std::uint64_t i = 0; i < d.distinct_count(); ++i) {
      const double v = d.distinct_mass(i);
      const std::uint64_t mult = d.multiplicity_of_distinct(i);
      const double lcand = pow1m(v, n) * d.tail_mass_after(above);
      if (lcand > bl) {
        bl = lcand;
        bl_eps = v;
      }
      const double ucand = pow1m(v, n) + d.tail_mass_after(above + mult);
      if (ucand < bu) {
        bu = ucand;
        bu_eps = v;
      }
      above += mult;
    }
  } else {
    for (std::uint64_t k = 1; k <= 10000000; ++k) {
      const double v = d.mass_by_rank(k);
      if (v <= 0.0) break;
      const double Fv = d.tail_mass_after(k - 1);
      const double lcand = pow1m(v, n) * Fv;
      if (lcand > bl) {
        bl = lcand;
        bl_eps = v;
      }
      const double ucand = pow1m(v, n) + d.tail_mass_after(k);
      if (ucand < bu) {
        bu = ucand;
        bu_eps = v;
      }
      if (Fv <= bl && pow1m(v, n) >= bu) break;
    }
  }
  lo.value = bl;
  lo.optimizer_eps = bl_eps;
  up.value = bu;
  up.optimizer_eps = bu_eps;
  return {lo, up};
}

BoundResult upper_missing_mass(const Distribution& d, std::uint64_t n, double c) {
  if (n < 1) throw domain_error("upper_missing_mass: need n >= 1");
  if (!(c > 0.0)) throw domain_error("upper_missing_mass: need c > 0");
  BoundResult out = base("missing_mass", true);
  if (d.finite_support()) {
    const double S = static_cast<double>(d.support_size());
    out.value = static_cast<double>(n) <= S ? std::exp(-static_cast<double>(n) / S)
                                            : S / (static_cast<double>(n) * std::exp(1.0));
    return out;
  }
  const double L = L_P(d);
  if (!require(out, std::isfinite(L), "halving increment finite",
               "sup of nu(eps/2) - nu(eps) is infinite for " + d.label()))
    return out;
  out.certified = false;
  out.conditions.push_back({"universal constant placeholder", true,
                            "uses c = " + str(c) + "; the constant is not certified"});
  out.value = L / (c * static_cast<double>(n));
  return out;
}

std::pair<BoundResult, BoundResult> accrual_powerlaw_bounds(double c_minus, double c_plus,
                                                            double alpha, std::uint64_t n,
                                                            const Distribution& d,
                                                            double eps_hi) {
  if (!(c_minus > 0.0) || !(c_plus > 0.0) || c_minus > c_plus)
    throw domain_error("accrual_powerlaw_bounds: need 0 < c_minus <= c_plus");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw domain_error("accrual_powerlaw_bounds: need alpha in (0,1)");
  if (!(eps_hi > 0.0 && eps_hi <= 1.0))
    throw domain_error("accrual_powerlaw_bounds: need eps_hi in (0,1]");
  if (n < 1) throw domain_error("accrual_powerlaw_bounds: need n >= 1");
  BoundResult lo = base("powerlaw_accrual_lower", false);
  BoundResult up = base("powerlaw_accrual_upper", true);

  bool grid_ok = true;
  std::string grid_detail = "holds at 200 log-spaced scales";
  const double lo_eps = std::min(1e-9, 0.5 * eps_hi);
  for (int i = 0; i < 200; ++i) {
    const double e = std::exp(std::log(lo_eps) +
                              (std::log(eps_hi) - std::log(lo_eps)) * i / 199.0);
    const double envv = std::pow(e, -alpha);
    const double nu = static_cast<double>(d.counting_nu(e));
    if (c_minus * envv > nu * (1.0 + 1e-9) || nu > c_plus * envv * (1.0 + 1e-9)) {
      grid_ok = false;
      grid_detail = "violated at eps = " + str(e) + " (nu = " + str(nu) + ")";
      break;
    }
  }
  const double ceiling = std::max(1.0 / static_cast<double>(n),
                                  (1.0 - alpha) * std::log(static_cast<double>(n)) /
                                      static_cast<double>(n));
  const bool ceil_ok = eps_hi >= ceiling * (1.0 - 1e-12);
  for (BoundResult* b : {&lo, &up}) {
    require(*b, grid_ok, "two-sided power envelope on the validation grid", grid_detail);
    require(*b, ceil_ok, "validation range covers the evaluation scales",
            "need eps_hi >= max(1/n, (1-alpha) log(n)/n) = " + str(ceiling));
  }
  if (!lo.applicable) return {lo, up};

  const double nd = static_cast<double>(n);
  const double cma = std::max(0.0, c_minus / (1.0 - alpha) - c_plus);
  const double cpa = std::pow(1.0 - alpha, 1.0 - alpha) * (c_plus / (1.0 - alpha) - c_minus);
  lo.value = pow1m(1.0 / nd, n) * cma / std::pow(nd, 1.0 - alpha);
  up.value = (1.0 + cpa * std::pow(std::log(nd), 1.0 - alpha)) / std::pow(nd, 1.0 - alpha);
  return {lo, up};
}

ScalingFloor scaling_floor(const Distribution& d, std::uint64_t n, std::uint64_t r,
                           const ExactOptions& opts) {
  if (d.finite_support()) throw domain_error("scaling_floor: needs infinite support");
  if (n < 1) throw domain_error("scaling_floor: need n >= 1");
  if (r > n) throw domain_error("scaling_floor: need r <= n");
  ScalingFloor f;
  const double thr = 1.0 / static_cast<double>(n);
  f.atom_rank = d.counting_nu(next_up(thr)) + 1;  // first atom with mass <= 1/n
  const double p = d.mass_by_rank(f.atom_rank);
  f.k = static_cast<std::uint64_t>(std::floor(1.0 / p));
  const double kd = static_cast<double>(f.k);
  f.floor_value = f.k == 1 ? 0.0 : (1.0 - p) * std::exp(kd * std::log1p(-1.0 / kd));
  const ExactResult em = exact_EM(d, n, r, opts);
  f.scaled_EM = std::exp((static_cast<double>(r) + 1.0) * std::log(kd) -
                         num::log_binom(n, r) + std::log(em.value));
  f.holds = f.scaled_EM >= f.floor_value * (1.0 - 1e-9);
  return f;
}

BoundReport bound_suite(const Distribution& d, std::uint64_t n, std::uint64_t r,
                        const SuiteOptions& opts) {
  if (n < 1) throw domain_error("bound_suite: need n >= 1");
  if (r > n) throw domain_error("bound_suite: need r <= n");
  BoundReport rep;
  rep.dist_label = d.label();
  rep.dist_config = d.to_json();
  rep.n = n;
  rep.r = r;
  rep.slack = opts.slack;
  rep.exact = exact_EM(d, n, r, opts.exact_opts);

  auto& v = rep.results;
  v.push_back(upper_split(d, n, r, opts.b));
  v.push_back(upper_support(d, n, r));
  if (r + 1 <= n && n >= 2) {
    v.push_back(upper_envelope(d, n, r, EnvelopeVariant::direct));
    v.push_back(upper_envelope(d, n, r, EnvelopeVariant::two_term, opts.beta));
    v.push_back(upper_envelope(d, n, r, EnvelopeVariant::kappa_adjusted, opts.beta));
  }
  if (r + 1 <= n) {
    v.push_back(upper_doubling(d, n, r));
    v.push_back(lower_split(d, n, r));
  }
  v.push_back(lower_envelope(d, n, r));
  if (r == 0) {
    auto [alo, aup] = accrual_bounds(d, n);
    v.push_back(std::move(alo));
    v.push_back(std::move(aup));
    v.push_back(upper_missing_mass(d, n, opts.coarse_c));
  }

  rep.tightest_upper = kInf;
  rep.tightest_lower = 0.0;
  bool ok = true;
  for (const BoundResult& b : v) {
    if (!b.applicable || !b.certified) continue;
    if (b.is_upper) {
      if (b.value < rep.tightest_upper) {
        rep.tightest_upper = b.value;
        rep.tightest_upper_source = b.source;
      }
      if (b.value < rep.exact.lo - opts.slack) ok = false;
    } else {
      if (b.value > rep.tightest_lower) {
        rep.tightest_lower = b.value;
        rep.tightest_lower_source = b.source;
      }
      if (b.value > rep.exact.hi + opts.slack) ok = false;
    }
  }
  rep.sandwich_ok = ok;
  return rep;
}

nlohmann::json BoundResult::to_json() const {
  nlohmann::json j{{"source", source},
                   {"direction", is_upper ? "upper" : "lower"},
                   {"value", json_real(value)},
                   {"applicable", applicable},
                   {"certified", certified}};
  j["optimizer_eps"] = optimizer_eps ? nlohmann::json(*optimizer_eps) : nlohmann::json(nullptr);
  auto arr = nlohmann::json::array();
  for (const auto& c : conditions) {
    arr.push_back({{"name", c.name}, {"holds", c.holds}, {"detail", c.detail}});
  }
  j["conditions"] = arr;
  return j;
}

nlohmann::json BoundReport::to_json() const {
  nlohmann::json j{{"dist", dist_label},
                   {"config", dist_config},
                   {"n", n},
                   {"r", r},
                   {"exact", {{"value", json_real(exact.value)},
                              {"lo", json_real(exact.lo)},
                              {"hi", json_real(exact.hi)}}},
                   {"tightest_upper", json_real(tightest_upper)},
                   {"tightest_upper_source", tightest_upper_source},
                   {"tightest_lower", json_real(tightest_lower)},
                   {"tightest_lower_source", tightest_lower_source},
                   {"verdict", sandwich_ok ? "ok" : "fail"}};
  auto rows = nlohmann::json::array();
  for (const auto& b : results) {
    auto row = b.to_json();
    row["exact"] = json_real(exact.value);
    if (!b.applicable) {
      row["verdict"] = "inapplicable";
    } else if (!b.certified) {
      row["verdict"] = "uncertified";
    } else if (b.is_upper) {
      row["verdict"] = b.value >= exact.lo - slack ? "ok" : "fail";
    } else {
      row["verdict"] = b.value <= exact.hi + slack ? "ok" : "fail";
    }
    rows.push_back(row);
  }
  j["bounds"] = rows;
  return j;
}

}  // namespace occu
