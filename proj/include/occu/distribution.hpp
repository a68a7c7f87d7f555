#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "occu/errors.hpp"
#include "occu/numerics.hpp"

namespace occu {

enum class Family { dirac, uniform, zipf, geometric, finite_explicit };

struct Atom {
  double mass;
  std::uint64_t multiplicity;
};

struct RVEnvelope {
  enum class Side { upper, lower };
  Side side;
  double alpha;                 // regular-variation index
  num::SlowlyVaryingSpec ell;
  double valid_from_epsilon;    // inequality certified for eps in (0, this]

  double eval(double eps) const { return std::pow(eps, -alpha) * ell.eval(1.0 / eps); }
};

/** A discrete law given by its multiset of atom masses, in non-increasing
 *  order. Closed-form families keep masses implicit; per-atom quantities are
 *  exact in double arithmetic. */
class Distribution {
 public:
  static Distribution dirac();
  static Distribution uniform(std::uint64_t m);
  static Distribution zipf(double alpha);
  static Distribution geometric(double q);
  static Distribution finite_explicit(std::vector<double> masses);

  static Distribution from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  std::string label() const;

  Family family() const { return family_; }
  bool finite_support() const;
  std::uint64_t support_size() const;  // throws domain_error for infinite support
  double p_star() const;               // largest atom mass

  /** mass of the atom of rank k (1-based, non-increasing order, counting
   *  multiplicity). */
  double mass_by_rank(std::uint64_t k) const;

  /** number of distinct mass values; throws for infinite support. */
  std::uint64_t distinct_count() const;

  /** i-th distinct mass, 0-based descending. For infinite families this is
   *  mass_by_rank(i+1) (all multiplicities are 1). */
  double distinct_mass(std::uint64_t i) const;

  std::uint64_t multiplicity_of_distinct(std::uint64_t i) const;

  struct AtomList {
    std::vector<Atom> atoms;  // descending by mass
    double tail_mass;         // certified neglected mass
  };
  /** Atoms until the neglected tail mass is <= tol or `limit` distinct
   *  entries, whichever comes first. */
  AtomList atoms_desc(double tol, std::uint64_t limit) const;
  AtomList atoms_desc(std::uint64_t limit = 10000000) const {
    return atoms_desc(trunc_tol_, limit);
  }

  /** admissible neglected tail mass for infinite families. */
  double truncation_tol() const { return trunc_tol_; }

  /** nu(eps) = #atoms with mass >= eps (with multiplicity), eps in (0, 1]. */
  std::uint64_t counting_nu(double eps) const;

  /** F(eps) = sum of masses of atoms with mass <= eps. */
  double accrual_F(double eps) const;

  /** total mass of atoms with rank > k (exact closed forms). */
  double tail_mass_after(std::uint64_t k) const;

  /** exact regular-variation index of nu, when known. */
  std::optional<double> rv_index() const;

  std::optional<RVEnvelope> rv_envelope(RVEnvelope::Side side) const;
  void set_user_envelope(const RVEnvelope& env);

  // family parameters (throws if wrong family)
  double zipf_alpha() const;
  double zipf_zeta() const;  // zeta(1/alpha)
  double geometric_q() const;

 private:
  Distribution() = default;
  void check_envelope(const RVEnvelope& env) const;

  Family family_ = Family::dirac;
  double alpha_ = 0.0;   // zipf
  double s_ = 0.0;       // zipf: 1/alpha
  double z_ = 0.0;       // zipf: zeta(s)
  double q_ = 0.0;       // geometric
  std::uint64_t m_ = 1;  // uniform
  double trunc_tol_ = 1e-12;
  std::vector<Atom> atoms_;         // finite_explicit (distinct, descending)
  std::vector<double> suffix_;      // finite_explicit: suffix mass sums by distinct index
  std::vector<RVEnvelope> user_envelopes_;
};

/** kappa_plus(eps) = sup_{0<u<=eps} nu(u/2)/nu(u)  (conventions 0/0 = 1,
 *  positive/0 = +infinity); kappa_minus swaps the ratio. Exact breakpoint
 *  sweep; for infinite families the small-u supremum beyond the sweep horizon
 *  is replaced by the analytic limit (error O(1/nu(horizon))). */
double kappa(const Distribution& d, bool plus, double eps);

/** limit of kappa_plus/minus as eps -> 0: 2^{alpha} / 2^{-alpha}. */
double kappa_limit(const Distribution& d, bool plus);

/** L(P) = sup_{0<eps<1} (nu(eps/2) - nu(eps)); +infinity when nu has positive
 *  regular-variation index. */
double L_P(const Distribution& d);

}  // namespace occu
