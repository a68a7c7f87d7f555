#include "occu/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "occu/errors.hpp"
#include "occu/kernels.hpp"
#include "occu/numerics.hpp"

namespace occu {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    state_ += kGolden;
    return mix64(state_);
  }
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

double cbar(std::uint64_t r) {
  const double rr = static_cast<double>(r);
  return std::exp((1.0 + rr) * std::log1p(rr) - std::lgamma(rr + 1.0) - (1.0 + rr));
}

double next_up(double x) { return std::nextafter(x, 4.0); }

}  // namespace

IntensityFn IntensityFn::constant(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw config_error("constant intensity needs lambda >= 0");
  IntensityFn f;
  f.form = Form::constant;
  f.lambda = lambda;
  return f;
}

IntensityFn IntensityFn::power(double a, double b) {
  if (!(a >= 0.0) || !std::isfinite(a)) throw config_error("power intensity needs a >= 0");
  if (!(b > -1.0) || !std::isfinite(b)) throw config_error("power intensity needs b > -1");
  IntensityFn f;
  f.form = Form::power;
  f.a = a;
  f.b = b;
  return f;
}

double IntensityFn::cumulative(double t) const {
  if (!(t >= 0.0)) throw domain_error("cumulative intensity needs t >= 0");
  if (form == Form::constant) return lambda * t;
  return t == 0.0 ? 0.0 : a * std::exp((1.0 + b) * std::log(t)) / (1.0 + b);
}

IntensityFn IntensityFn::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("form"))
    throw config_error("intensity config needs a form field");
  const std::string form = j.at("form").get<std::string>();
  if (form == "constant") {
    for (const auto& [key, value] : j.items()) {
      (void)value;
      if (key != "form" && key != "lambda")
        throw config_error("unknown intensity key: " + key);
    }
    if (!j.contains("lambda")) throw config_error("constant intensity needs lambda");
    return constant(j.at("lambda").get<double>());
  }
  if (form == "power") {
    for (const auto& [key, value] : j.items()) {
      (void)value;
      if (key != "form" && key != "a" && key != "b")
        throw config_error("unknown intensity key: " + key);
    }
    if (!j.contains("a") || !j.contains("b")) throw config_error("power intensity needs a, b");
    return power(j.at("a").get<double>(), j.at("b").get<double>());
  }
  throw config_error("unknown intensity form: " + form);
}

nlohmann::json IntensityFn::to_json() const {
  if (form == Form::constant) return {{"form", "constant"}, {"lambda", lambda}};
  return {{"form", "power"}, {"a", a}, {"b", b}};
}

ExactResult exact_EM_poisson(const Distribution& d, double Lambda, std::uint64_t r,
                             const ExactOptions& opts) {
  if (!(Lambda > 0.0) || !std::isfinite(Lambda))
    throw domain_error("poissonized expectation needs Lambda > 0");
  const double rr = static_cast<double>(r);
  const double pref = std::exp(rr * std::log(Lambda) - std::lgamma(rr + 1.0));
  const auto term = [&](double p) {
    return std::exp((1.0 + rr) * std::log(p) - Lambda * p);
  };

  if (d.finite_support()) {
    const std::uint64_t dc = d.distinct_count();
    const double raw = kern::blocked_sum(dc, [&](std::uint64_t i) {
      return static_cast<double>(d.multiplicity_of_distinct(i)) * term(d.distinct_mass(i));
    });
    const double v = pref * raw;
    return {v, v, v, d.support_size()};
  }

  const bool zipf = d.family() == Family::zipf;
  const double s = zipf ? 1.0 / d.zipf_alpha() : 0.0;
  const double z = zipf ? d.zipf_zeta() : 0.0;
  // int_{x0}^inf p(x)^{1+r} e^{-Lambda p(x)} dx for the zipf masses
  const auto tail_integral = [&](double x0) {
    const double w0 = std::exp(-s * std::log(x0)) / z;
    return (1.0 / s) * std::exp((-1.0 / s) * std::log(z)) *
           num::lower_incomplete_gamma(1.0 + rr - 1.0 / s, Lambda * w0) /
           std::exp((1.0 + rr - 1.0 / s) * std::log(Lambda));
  };

  double head = 0.0, comp = 0.0;
  std::uint64_t done = 0;
  std::uint64_t K = 1024;
  for (;;) {
    for (std::uint64_t k = done + 1; k <= K; ++k) {
      const double y = term(d.mass_by_rank(k)) - comp;
      const double t = head + y;
      comp = (t - head) - y;
      head = t;
    }
    done = K;

    const double pn = d.mass_by_rank(K + 1);
    double lo_t = 0.0;
    const double pow_r = (r == 0 || pn == 0.0) ? 1.0 : std::exp(rr * std::log(pn));
    double hi_t = pow_r * d.tail_mass_after(K);
    if (zipf) {
      // convexity of the tail integrand holds once u = Lambda p stays below
      // the smaller root of s(1+r-u)^2 + (1+r) - (s+1)u
      const double u = Lambda * d.mass_by_rank(K);  // p(K) >= p(K + 1/2)
      const double du = (1.0 + rr) - u;
      const bool convex = u <= 1.0 + rr && s * du * du + (1.0 + rr) - (s + 1.0) * u >= 0.0;
      if (convex && 1.0 + rr - 1.0 / s <= 170.0) {
        const double mid = tail_integral(static_cast<double>(K) + 0.5);
        if (mid < hi_t) {
          hi_t = mid;
          lo_t = tail_integral(static_cast<double>(K + 1)) + 0.5 * term(pn);
        }
      }
    }
    const double width = hi_t - lo_t;
    const double scale = std::max(opts.tol * (head + lo_t), opts.abs_tol / std::max(pref, 1.0));
    if (width <= scale) {
      return {pref * (head + 0.5 * (lo_t + hi_t)), pref * (head + lo_t), pref * (head + hi_t),
              done};
    }
    if (K >= opts.max_atoms)
      throw precision_error("poissonized occupancy sum did not certify within the atom cap",
                            pref * width);
    K = std::min(opts.max_atoms, K * 2);
  }
}

namespace {

BoundResult poisson_base(const char* source) {
  BoundResult b;
  b.source = source;
  b.is_upper = true;
  b.value = kInf;
  return b;
}

bool require(BoundResult& b, bool holds, const std::string& name, const std::string& detail) {
  b.conditions.push_back({name, holds, detail});
  if (!holds) {
    b.applicable = false;
    b.value = kInf;
    b.optimizer_eps.reset();
  }
  return holds;
}

BoundResult poisson_split(const Distribution& d, double Lambda, std::uint64_t r) {
  BoundResult out = poisson_base("poisson_split");
  const double rr = static_cast<double>(r);
  const double cb = cbar(r);
  const double half = 0.5 * Lambda;
  const double pref2 =
      std::exp((1.0 + rr) * std::log(2.0) + rr * std::log(Lambda) - std::lgamma(rr + 1.0));
  const double j_scale = std::exp(-(rr + 1.0) * std::log(half));
  const auto J = [&](double y) {
    return num::lower_incomplete_gamma(rr + 1.0, half * y) * j_scale;
  };

  const bool finite = d.finite_support();
  std::uint64_t K = finite ? d.support_size()
                           : std::max<std::uint64_t>(
                                 16384, 4 * d.counting_nu(std::min(1.0, 1.0 / Lambda)));
  for (int attempt = 0;; ++attempt) {
    std::vector<double> mass;
    mass.reserve(K);
    for (std::uint64_t k = 1; k <= K; ++k) {
      const double p = d.mass_by_rank(k);
      if (p == 0.0) break;  // geometric masses underflow deep in the tail
      mass.push_back(p);
    }
    const std::uint64_t Ke = mass.size();
    double tail_cap = 0.0;
    if (!finite) {
      const double pn = d.mass_by_rank(Ke + 1);
      const double pow_r = (r == 0 || pn == 0.0) ? 1.0 : std::exp(rr * std::log(2.0 * pn));
      tail_cap = pow_r * 2.0 * d.tail_mass_after(Ke) / (rr + 1.0);
    }

    // suffix sums of J(2 p_k), k descending by mass
    std::vector<double> suffix(Ke + 1, 0.0);
    for (std::uint64_t k = Ke; k-- > 0;) suffix[k] = suffix[k + 1] + J(2.0 * mass[k]);

    std::vector<double> cand;
    cand.reserve(2 * Ke);
    for (std::uint64_t k = 0; k < Ke; ++k) {
      cand.push_back(next_up(mass[k]));
      cand.push_back(next_up(2.0 * mass[k]));
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

    double best = kInf;
    double best_eps = 0.0;
    if (finite) {
      best = cb * static_cast<double>(d.support_size()) / Lambda;  // eps -> 0 limit
      best_eps = 0.0;
    }
    for (const double eps : cand) {
      if (!(0.5 * eps > 0.0)) continue;  // subnormal breakpoints halve to zero
      const double nu = eps > 1.0 ? 0.0 : static_cast<double>(d.counting_nu(eps));
      const double nu_half = static_cast<double>(d.counting_nu(0.5 * eps));
      // head atoms with 2 p_k < eps: masses are descending, find the first
      const auto it = std::upper_bound(mass.begin(), mass.end(), 0.5 * eps,
                                       [](double a, double b) { return a > b; });
      const double small_sum = suffix[static_cast<std::size_t>(it - mass.begin())];
      const double psi =
          cb * nu / Lambda + pref2 * (nu_half * J(eps) + small_sum + tail_cap);
      if (psi < best) {
        best = psi;
        best_eps = eps;
      }
    }

    const bool deepest = !cand.empty() && best_eps == cand.front();
    if (finite || !deepest || attempt >= 6) {
      out.value = best;
      out.optimizer_eps = best_eps;
      out.conditions.push_back(
          {"candidate sweep", true,
           "minimum over " + std::to_string(cand.size()) + " breakpoints, horizon " +
               std::to_string(Ke) + " atoms"});
      return out;
    }
    K *= 2;
  }
}

BoundResult poisson_envelope(const Distribution& d, double Lambda, std::uint64_t r) {
  BoundResult out = poisson_base("poisson_envelope");
  const auto env = d.rv_envelope(RVEnvelope::Side::upper);
  if (!require(out, env.has_value(), "upper counting envelope",
               "needs nu(eps) <= eps^-alpha ell(1/eps)"))
    return out;
  require(out, env->valid_from_epsilon >= 1.0 - 1e-15, "envelope validity",
          "envelope must hold on all of (0, 1]");
  require(out, Lambda >= 1.0, "intensity floor", "needs Lambda >= 1");
  const double rr = static_cast<double>(r);
  require(out, env->alpha <= 1.0 + rr + 1e-15, "index bound", "needs alpha <= 1 + r");
  const bool ell_ok = env->ell.form == num::SlowlyVaryingSpec::Form::constant ||
                      env->ell.gamma <= 0.0;
  require(out, ell_ok, "ell monotone", "needs a non-increasing slowly varying factor");
  if (!out.applicable) return out;

  const double g = num::lower_incomplete_gamma(1.0 + rr - env->alpha, 0.5);
  const double c1 =
      cbar(r) + std::exp((1.0 + rr) * std::log(4.0) - std::lgamma(rr + 1.0)) * g;
  out.value = c1 * std::exp((env->alpha - 1.0) * std::log(Lambda)) * env->ell.eval(Lambda);
  return out;
}

}  // namespace

BoundResult upper_poisson(const Distribution& d, double Lambda, std::uint64_t r,
                          PoissonBoundVariant variant) {
  if (!(Lambda > 0.0) || !std::isfinite(Lambda))
    throw domain_error("poissonized bound needs Lambda > 0");
  return variant == PoissonBoundVariant::adaptive_split ? poisson_split(d, Lambda, r)
                                                        : poisson_envelope(d, Lambda, r);
}

std::uint64_t poisson_draw(double mu, std::uint64_t stream_seed) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw domain_error("poisson_draw needs mu >= 0");
  SplitMix64 rng(stream_seed);
  if (mu == 0.0) return 0;
  if (mu <= 30.0) {
    const double u = rng.unit();
    double p = std::exp(-mu);
    double c = p;
    std::uint64_t k = 0;
    while (u > c && k < 400) {
      ++k;
      p *= mu / static_cast<double>(k);
      c += p;
    }
    return k;
  }
  // Hormann's PTRS transformed rejection
  const double b = 0.931 + 2.53 * std::sqrt(mu);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  const double log_mu = std::log(mu);
  for (;;) {
    const double u = rng.unit() - 0.5;
    const double v = rng.unit();
    const double us = 0.5 - std::abs(u);
    const double kd = std::floor((2.0 * a / us + b) * u + mu + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(kd);
    if (kd < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
        kd * log_mu - mu - std::lgamma(kd + 1.0))
      return static_cast<std::uint64_t>(kd);
  }
}

SampleSummary sample_poissonized(const Distribution& d, const IntensityFn& intensity, double t,
                                 const SeedSpec& seed, std::uint64_t replicate) {
  if (!(t > 0.0) || !std::isfinite(t)) throw domain_error("sample_poissonized needs t > 0");
  const double Lambda = intensity.cumulative(t);
  const std::uint64_t rs = seed.replicate_seed(replicate);
  const std::uint64_t n_t = poisson_draw(Lambda, rs);
  if (n_t == 0) {
    SampleSummary s;
    s.realized_M[0] = 1.0;
    return s;
  }
  const SeedSpec inner{mix64(rs ^ 0x706f697373ull)};
  return sample_counts(d, n_t, inner, 0);
}

}  // namespace occu
