#include "occu/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace occu {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_param(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

void require_keys(const nlohmann::json& j, std::initializer_list<const char*> keys) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : keys) {
      if (item.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) throw config_error("distribution config: unknown key '" + item.key() + "'");
  }
}

}  // namespace

Distribution Distribution::dirac() {
  Distribution d;
  d.family_ = Family::dirac;
  return d;
}

Distribution Distribution::uniform(std::uint64_t m) {
  if (m < 1) throw domain_error("uniform: need m >= 1");
  Distribution d;
  d.family_ = Family::uniform;
  d.m_ = m;
  return d;
}

Distribution Distribution::zipf(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw domain_error("zipf: need alpha in (0,1)");
  Distribution d;
  d.family_ = Family::zipf;
  d.alpha_ = alpha;
  d.s_ = 1.0 / alpha;
  d.z_ = num::riemann_zeta(d.s_);
  return d;
}

Distribution Distribution::geometric(double q) {
  if (!(q > 0.0 && q < 1.0)) throw domain_error("geometric: need q in (0,1)");
  Distribution d;
  d.family_ = Family::geometric;
  d.q_ = q;
  return d;
}

Distribution Distribution::finite_explicit(std::vector<double> masses) {
  if (masses.empty()) throw domain_error("finite_explicit: empty mass list");
  double sum = 0.0;
  for (double p : masses) {
    if (!(p > 0.0) || p > 1.0) throw domain_error("finite_explicit: masses must lie in (0,1]");
    sum += p;
  }
  if (std::fabs(sum - 1.0) > 1e-12) throw domain_error("finite_explicit: masses must sum to 1");
  std::sort(masses.begin(), masses.end(), std::greater<double>());
  Distribution d;
  d.family_ = Family::finite_explicit;
  for (double p : masses) {
    if (!d.atoms_.empty() && d.atoms_.back().mass == p) {
      d.atoms_.back().multiplicity += 1;
    } else {
      d.atoms_.push_back({p, 1});
    }
  }
  d.suffix_.assign(d.atoms_.size() + 1, 0.0);
  for (std::size_t i = d.atoms_.size(); i-- > 0;) {
    d.suffix_[i] = d.suffix_[i + 1] +
                   d.atoms_[i].mass * static_cast<double>(d.atoms_[i].multiplicity);
  }
  return d;
}

bool Distribution::finite_support() const {
  return family_ != Family::zipf && family_ != Family::geometric;
}

std::uint64_t Distribution::support_size() const {
  switch (family_) {
    case Family::dirac:
      return 1;
    case Family::uniform:
      return m_;
    case Family::finite_explicit: {
      std::uint64_t n = 0;
      for (const auto& a : atoms_) n += a.multiplicity;
      return n;
    }
    default:
      throw domain_error("support_size: infinite support");
  }
}

double Distribution::p_star() const {
  switch (family_) {
    case Family::dirac:
      return 1.0;
    case Family::uniform:
      return 1.0 / static_cast<double>(m_);
    case Family::zipf:
      return 1.0 / z_;
    case Family::geometric:
      return 1.0 - q_;
    case Family::finite_explicit:
      return atoms_.front().mass;
  }
  throw domain_error("p_star: bad family");
}

double Distribution::mass_by_rank(std::uint64_t k) const {
  if (k < 1) throw domain_error("mass_by_rank: ranks are 1-based");
  switch (family_) {
    case Family::dirac:
      if (k > 1) throw domain_error("mass_by_rank: rank beyond support");
      return 1.0;
    case Family::uniform:
      if (k > m_) throw domain_error("mass_by_rank: rank beyond support");
      return 1.0 / static_cast<double>(m_);
    case Family::zipf:
      return std::pow(static_cast<double>(k), -s_) / z_;
    case Family::geometric:
      return (1.0 - q_) * std::pow(q_, static_cast<double>(k - 1));
    case Family::finite_explicit: {
      std::uint64_t c = 0;
      for (const auto& a : atoms_) {
        c += a.multiplicity;
        if (k <= c) return a.mass;
      }
      throw domain_error("mass_by_rank: rank beyond support");
    }
  }
  throw domain_error("mass_by_rank: bad family");
}

std::uint64_t Distribution::distinct_count() const {
  switch (family_) {
    case Family::dirac:
      return 1;
    case Family::uniform:
      return 1;
    case Family::finite_explicit:
      return atoms_.size();
    default:
      throw domain_error("distinct_count: infinite support");
  }
}

double Distribution::distinct_mass(std::uint64_t i) const {
  switch (family_) {
    case Family::dirac:
      return 1.0;
    case Family::uniform:
      return 1.0 / static_cast<double>(m_);
    case Family::finite_explicit:
      return atoms_.at(i).mass;
    default:
      return mass_by_rank(i + 1);
  }
}

std::uint64_t Distribution::multiplicity_of_distinct(std::uint64_t i) const {
  switch (family_) {
    case Family::dirac:
      return 1;
    case Family::uniform:
      return m_;
    case Family::finite_explicit:
      return atoms_.at(i).multiplicity;
    default:
      return 1;
  }
}

Distribution::AtomList Distribution::atoms_desc(double tol, std::uint64_t limit) const {
  if (tol < 0.0) throw domain_error("atoms_desc: tol must be >= 0");
  AtomList out;
  std::uint64_t rank = 0;  // atoms emitted, counting multiplicity
  std::uint64_t i = 0;
  const bool fin = finite_support();
  while (true) {
    if (out.atoms.size() >= limit) break;
    if (fin && i >= distinct_count()) break;
    const double mass = distinct_mass(i);
    const std::uint64_t mult = multiplicity_of_distinct(i);
    out.atoms.push_back({mass, mult});
    rank += mult;
    ++i;
    if (tail_mass_after(rank) <= tol) break;
  }
  out.tail_mass = tail_mass_after(rank);
  return out;
}

std::uint64_t Distribution::counting_nu(double eps) const {
  if (!(eps > 0.0)) throw domain_error("counting_nu: need eps > 0");
  if (eps > 1.0) return 0;
  switch (family_) {
    case Family::dirac:
      return 1;
    case Family::uniform:
      return eps <= 1.0 / static_cast<double>(m_) ? m_ : 0;
    case Family::zipf: {
      if (eps > p_star()) return 0;
      const double guess = std::pow(z_ * eps, -alpha_);
      if (guess > 4.0e15) throw precision_error("counting_nu: eps too small", guess);
      std::uint64_t m = static_cast<std::uint64_t>(guess);
      if (m < 1) m = 1;
      while (m >= 1 && mass_by_rank(m) < eps) --m;
      while (mass_by_rank(m + 1) >= eps) ++m;
      return m;
    }
    case Family::geometric: {
      if (eps > p_star()) return 0;
      const double g = std::log(eps / (1.0 - q_)) / std::log(q_);
      if (g > 4.0e15) throw precision_error("counting_nu: eps too small", g);
      std::uint64_t m = static_cast<std::uint64_t>(std::floor(g)) + 1;
      if (m < 1) m = 1;
      while (m >= 1 && mass_by_rank(m) < eps) --m;
      while (mass_by_rank(m + 1) >= eps) ++m;
      return m;
    }
    case Family::finite_explicit: {
      std::uint64_t c = 0;
      for (const auto& a : atoms_) {
        if (a.mass >= eps) c += a.multiplicity;
        else break;
      }
      return c;
    }
  }
  throw domain_error("counting_nu: bad family");
}

double Distribution::accrual_F(double eps) const {
  if (!(eps >= 0.0 && eps <= 1.0)) throw domain_error("accrual_F: need eps in [0,1]");
  if (eps == 0.0) return 0.0;
  if (eps >= p_star()) return 1.0;
  // count atoms with mass strictly greater than eps
  std::uint64_t ge = counting_nu(eps);
  std::uint64_t strict = ge;
  if (ge >= 1) {
    switch (family_) {
      case Family::uniform:
      case Family::dirac:
        if (p_star() == eps) strict = 0;
        break;
      case Family::zipf:
      case Family::geometric:
        if (mass_by_rank(ge) == eps) strict = ge - 1;
        break;
      case Family::finite_explicit: {
        std::uint64_t c = 0;
        for (const auto& a : atoms_) {
          if (a.mass > eps) c += a.multiplicity;
          else break;
        }
        strict = c;
        break;
      }
    }
  }
  return tail_mass_after(strict);
}

double Distribution::tail_mass_after(std::uint64_t k) const {
  switch (family_) {
    case Family::dirac:
      return k >= 1 ? 0.0 : 1.0;
    case Family::uniform:
      return k >= m_ ? 0.0
                     : static_cast<double>(m_ - k) / static_cast<double>(m_);
    case Family::zipf:
      return num::zeta_tail(s_, k) / z_;
    case Family::geometric:
      return std::pow(q_, static_cast<double>(k));
    case Family::finite_explicit: {
      std::uint64_t c = 0;
      for (std::size_t i = 0; i < atoms_.size(); ++i) {
        if (k <= c) return suffix_[i];
        const std::uint64_t take = std::min<std::uint64_t>(atoms_[i].multiplicity, k - c);
        if (take < atoms_[i].multiplicity) {
          return suffix_[i] - static_cast<double>(take) * atoms_[i].mass;
        }
        c += take;
      }
      return 0.0;
    }
  }
  throw domain_error("tail_mass_after: bad family");
}

std::optional<double> Distribution::rv_index() const {
  switch (family_) {
    case Family::zipf:
      return alpha_;
    case Family::geometric:
      return 0.0;
    case Family::dirac:
    case Family::uniform:
    case Family::finite_explicit:
      return 0.0;  // finite support: nu is constant near 0
  }
  return std::nullopt;
}

void Distribution::check_envelope(const RVEnvelope& env) const {
  const double lo = 1e-9;
  const double hi = env.valid_from_epsilon;
  if (!(hi > lo)) return;
  for (int i = 0; i < 100; ++i) {
    const double t = static_cast<double>(i) / 99.0;
    const double eps = lo * std::pow(hi / lo, t);
    const double nu = static_cast<double>(counting_nu(eps));
    const double bound = env.eval(eps);
    const bool ok = env.side == RVEnvelope::Side::upper ? nu <= bound * (1.0 + 1e-9)
                                                        : nu >= bound * (1.0 - 1e-9);
    if (!ok) {
      throw domain_error("rv_envelope failed verification at eps = " + format_param(eps));
    }
  }
}

std::optional<RVEnvelope> Distribution::rv_envelope(RVEnvelope::Side side) const {
  for (const auto& env : user_envelopes_) {
    if (env.side == side) {
      check_envelope(env);
      return env;
    }
  }
  RVEnvelope env;
  env.side = side;
  switch (family_) {
    case Family::zipf:
      env.alpha = alpha_;
      env.ell.form = num::SlowlyVaryingSpec::Form::constant;
      if (side == RVEnvelope::Side::upper) {
        env.ell.C = std::pow(z_, -alpha_);
        env.valid_from_epsilon = 1.0;
      } else {
        env.ell.C = 0.5 * std::pow(z_, -alpha_);
        env.valid_from_epsilon = 1.0 / (std::pow(2.0, s_) * z_);
      }
      break;
    case Family::uniform:
      if (side == RVEnvelope::Side::lower) return std::nullopt;
      env.alpha = 0.0;
      env.ell.form = num::SlowlyVaryingSpec::Form::constant;
      env.ell.C = static_cast<double>(m_);
      env.valid_from_epsilon = 1.0;
      break;
    case Family::dirac:
      if (side == RVEnvelope::Side::lower) return std::nullopt;
      env.alpha = 0.0;
      env.ell.form = num::SlowlyVaryingSpec::Form::constant;
      env.ell.C = 1.0;
      env.valid_from_epsilon = 1.0;
      break;
    case Family::geometric: {
      if (side == RVEnvelope::Side::lower) return std::nullopt;
      env.alpha = 0.0;
      env.ell.form = num::SlowlyVaryingSpec::Form::log_power;
      env.ell.gamma = 1.0;
      // nu(eps) = k on ((1-q)q^k, (1-q)q^{k-1}], so the least valid constant
      // is the sup over right endpoints of k / log(e + 1/eps); the ratio is
      // eventually monotone with limit 1/log(1/q)
      const double lg = std::log(1.0 / q_);
      double c = 1.0 / lg;
      for (int k = 1; k <= 200000; ++k) {
        const double logx = (k - 1) * lg - std::log1p(-q_);
        const double denom =
            logx > 40.0 ? logx : std::log(std::exp(1.0) + std::exp(logx));
        c = std::max(c, static_cast<double>(k) / denom);
      }
      env.ell.C = c;
      env.valid_from_epsilon = 1.0;
      break;
    }
    case Family::finite_explicit:
      return std::nullopt;
  }
  check_envelope(env);
  return env;
}

void Distribution::set_user_envelope(const RVEnvelope& env) {
  check_envelope(env);
  user_envelopes_.push_back(env);
}

double Distribution::zipf_alpha() const {
  if (family_ != Family::zipf) throw domain_error("zipf_alpha: not a zipf distribution");
  return alpha_;
}

double Distribution::zipf_zeta() const {
  if (family_ != Family::zipf) throw domain_error("zipf_zeta: not a zipf distribution");
  return z_;
}

double Distribution::geometric_q() const {
  if (family_ != Family::geometric) throw domain_error("geometric_q: not geometric");
  return q_;
}

Distribution Distribution::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("family")) {
    throw config_error("distribution config: need object with 'family'");
  }
  const std::string fam = j.at("family").get<std::string>();
  double tol = 1e-12;
  if (j.contains("truncation_tol")) {
    tol = j.at("truncation_tol").get<double>();
    if (!(tol > 0.0)) throw config_error("distribution config: truncation_tol must be > 0");
  }
  Distribution d;
  if (fam == "dirac") {
    require_keys(j, {"family", "truncation_tol"});
    d = dirac();
  } else if (fam == "uniform") {
    require_keys(j, {"family", "m", "truncation_tol"});
    d = uniform(j.at("m").get<std::uint64_t>());
  } else if (fam == "zipf") {
    require_keys(j, {"family", "alpha", "truncation_tol"});
    d = zipf(j.at("alpha").get<double>());
  } else if (fam == "geometric") {
    require_keys(j, {"family", "q", "truncation_tol"});
    d = geometric(j.at("q").get<double>());
  } else if (fam == "explicit") {
    require_keys(j, {"family", "masses", "truncation_tol"});
    d = finite_explicit(j.at("masses").get<std::vector<double>>());
  } else {
    throw config_error("distribution config: unknown family '" + fam + "'");
  }
  d.trunc_tol_ = tol;
  return d;
}

nlohmann::json Distribution::to_json() const {
  nlohmann::json j;
  switch (family_) {
    case Family::dirac:
      j = {{"family", "dirac"}};
      break;
    case Family::uniform:
      j = {{"family", "uniform"}, {"m", m_}};
      break;
    case Family::zipf:
      j = {{"family", "zipf"}, {"alpha", alpha_}};
      break;
    case Family::geometric:
      j = {{"family", "geometric"}, {"q", q_}};
      break;
    case Family::finite_explicit: {
      std::vector<double> masses;
      for (const auto& a : atoms_) {
        for (std::uint64_t i = 0; i < a.multiplicity; ++i) masses.push_back(a.mass);
      }
      j = {{"family", "explicit"}, {"masses", masses}};
      break;
    }
  }
  if (trunc_tol_ != 1e-12) j["truncation_tol"] = trunc_tol_;
  return j;
}

std::string Distribution::label() const {
  switch (family_) {
    case Family::dirac:
      return "dirac";
    case Family::uniform:
      return "uniform(" + std::to_string(m_) + ")";
    case Family::zipf:
      return "zipf(" + format_param(alpha_) + ")";
    case Family::geometric:
      return "geometric(" + format_param(q_) + ")";
    case Family::finite_explicit:
      return "finite(k=" + std::to_string(atoms_.size()) + ")";
  }
  return "?";
}

namespace {

double nu_ratio(const Distribution& d, bool plus, double u) {
  const double num_arg = plus ? 0.5 * u : u;
  const double den_arg = plus ? u : 0.5 * u;
  const double a = static_cast<double>(d.counting_nu(num_arg));
  const double b = static_cast<double>(d.counting_nu(den_arg));
  if (b == 0.0) return a == 0.0 ? 1.0 : kInf;
  return a / b;
}

}  // namespace

double kappa(const Distribution& d, bool plus, double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw domain_error("kappa: need eps in (0,1]");
  double best = nu_ratio(d, plus, eps);
  if (d.finite_support()) {
    const std::uint64_t nd = d.distinct_count();
    for (std::uint64_t i = 0; i < nd; ++i) {
      const double p = d.distinct_mass(i);
      for (double u : {p, 2.0 * p}) {
        if (u > 0.0 && u <= eps) best = std::max(best, nu_ratio(d, plus, u));
      }
    }
    return best;
  }
  // infinite support: sweep breakpoints down to a deep horizon, then replace
  // the remaining small-u supremum by the analytic limit
  best = std::max(best, kappa_limit(d, plus));
  constexpr std::uint64_t kSweep = 200000;
  std::uint64_t k = 1;
  while (d.mass_by_rank(k) > eps && k < (1ull << 62)) ++k;  // first atom <= eps
  for (std::uint64_t i = 0; i < kSweep; ++i) {
    const double p = d.mass_by_rank(k + i);
    if (p <= 0.0) break;
    best = std::max(best, nu_ratio(d, plus, p));
    const double u2 = 2.0 * p;
    if (u2 <= eps) best = std::max(best, nu_ratio(d, plus, u2));
  }
  return best;
}

double kappa_limit(const Distribution& d, bool plus) {
  const auto idx = d.rv_index();
  if (!idx.has_value()) {
    throw domain_error("kappa_limit: no exact regular-variation index available");
  }
  return std::pow(2.0, plus ? *idx : -(*idx));
}

double L_P(const Distribution& d) {
  const auto diff_at = [&](double eps) -> double {
    return static_cast<double>(d.counting_nu(0.5 * eps)) -
           static_cast<double>(d.counting_nu(eps));
  };
  double best = diff_at(std::nextafter(1.0, 0.0));
  if (d.finite_support()) {
    const std::uint64_t nd = d.distinct_count();
    for (std::uint64_t i = 0; i < nd; ++i) {
      const double p = d.distinct_mass(i);
      for (double u : {p, 2.0 * p}) {
        if (u > 0.0 && u < 1.0) best = std::max(best, diff_at(u));
      }
    }
    return best;
  }
  if (d.family() == Family::zipf) return kInf;  // nu has positive rv index
  // geometric: atom log-positions form an arithmetic progression with step
  // log(1/q); any half-open log-interval of length log 2 holds at most
  // ceil(log2 / log(1/q)) of them, and the continuous phase sweep attains it.
  const double q = d.geometric_q();
  const double delta = std::log(2.0) / std::log(1.0 / q);
  return std::ceil(delta - 1e-12);
}

}  // namespace occu
