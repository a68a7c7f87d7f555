#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <doctest.h>

#include "occu/bounds.hpp"
#include "occu/exact.hpp"

using namespace occu;

namespace {
const Distribution u10 = Distribution::uniform(10);
const Distribution z5 = Distribution::zipf(0.5);
const Distribution g5 = Distribution::geometric(0.5);
}  // namespace

TEST_CASE("split bound: frozen values and optimal breakpoints") {
  auto b = upper_split(u10, 100, 0);
  CHECK(b.value == doctest::Approx(0.036787944117144235).epsilon(1e-12));
  CHECK(*b.optimizer_eps == 0.0);  // all mass in the nu term for uniform

  b = upper_split(z5, 100, 0);
  CHECK(b.value == doctest::Approx(0.21937262087636955).epsilon(1e-12));
  CHECK(*b.optimizer_eps == doctest::Approx(0.00067547455761558003).epsilon(1e-12));

  b = upper_split(z5, 100, 2);
  CHECK(b.value == doctest::Approx(0.42862197775537147).epsilon(1e-12));

  b = upper_split(g5, 100, 0);
  CHECK(b.value == doctest::Approx(0.047263096915298689).epsilon(1e-12));

  // r = n degenerates to p_star^{n+1} nu(eps) + eps^n
  b = upper_split(Distribution::dirac(), 5, 5);
  CHECK(b.value == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("split bound optimizer is a true infimum of the objective") {
  // r = 0, b = 2 objective, written out independently:
  //   g(eps) = e^{-1} nu(eps)/n + 2 sum_a int_0^{min(eps, 2 p_a)} (1-u/2)^n du
  const auto d = Distribution::finite_explicit({0.55, 0.25, 0.12, 0.05, 0.03});
  const std::uint64_t n = 40;
  const auto objective = [&](double eps) {
    double value = std::exp(-1.0) * static_cast<double>(d.counting_nu(std::max(eps, 1e-300))) /
                   static_cast<double>(n);
    if (eps == 0.0) value = std::exp(-1.0) * 5.0 / static_cast<double>(n);
    for (std::uint64_t k = 1; k <= 5; ++k) {
      const double y = std::min(eps, 2.0 * d.mass_by_rank(k));
      // int_0^y (1-u/2)^n du = 2(1 - (1-y/2)^{n+1})/(n+1)
      value += 2.0 * 2.0 * (1.0 - std::pow(1.0 - y / 2.0, n + 1)) / static_cast<double>(n + 1);
    }
    return value;
  };
  const auto b = upper_split(d, n, 0);
  REQUIRE(b.optimizer_eps.has_value());
  CHECK(b.value == doctest::Approx(objective(*b.optimizer_eps)).epsilon(1e-11));
  // no grid point beats the returned infimum
  double best = objective(0.0);
  for (int i = 0; i <= 3000; ++i) {
    const double eps = 1.2 * static_cast<double>(i) / 3000.0;
    best = std::min(best, objective(std::min(eps, 1.0)));
  }
  CHECK(b.value <= best + 1e-11);
  CHECK(b.value >= exact_EM(d, n, 0).value - 1e-12);
}

TEST_CASE("support bound matches the split bound at uniform") {
  const auto s = upper_support(u10, 100, 0);
  CHECK(s.value == doctest::Approx(0.036787944117144235).epsilon(1e-12));
  CHECK_FALSE(upper_support(z5, 100, 0).applicable);  // infinite support
}

TEST_CASE("envelope bounds: frozen values and variant ordering") {
  CHECK(upper_envelope(z5, 100, 0, EnvelopeVariant::direct).value ==
        doctest::Approx(0.40606780305437173).epsilon(1e-12));
  CHECK(upper_envelope(z5, 100, 0, EnvelopeVariant::two_term).value ==
        doctest::Approx(0.40984571987926693).epsilon(1e-12));
  CHECK(upper_envelope(z5, 100, 0, EnvelopeVariant::kappa_adjusted).value ==
        doctest::Approx(0.25196313506249707).epsilon(1e-12));
  CHECK(upper_envelope(u10, 100, 0, EnvelopeVariant::direct).value ==
        doctest::Approx(0.19417568023209084).epsilon(1e-12));
  CHECK(upper_envelope(g5, 100, 0, EnvelopeVariant::two_term).value ==
        doctest::Approx(0.21476069789720476).epsilon(1e-12));
  CHECK(upper_envelope(z5, 100, 1, EnvelopeVariant::direct).value ==
        doctest::Approx(0.86064897875187063).epsilon(1e-12));
  // closed-form relaxations can never undercut the optimized split bound
  for (std::uint64_t n : {std::uint64_t{10}, std::uint64_t{100}, std::uint64_t{1000}}) {
    const auto env = upper_envelope(z5, n, 0, EnvelopeVariant::direct);
    const auto split = upper_split(z5, n, 0);
    CHECK(env.value >= split.value - 1e-12);
  }
}

TEST_CASE("doubling-ratio bound: frozen values and comparison") {
  CHECK(upper_doubling(z5, 100, 0).value ==
        doctest::Approx(0.12205520648702597).epsilon(1e-12));
  CHECK(upper_doubling(z5, 1000, 1).value ==
        doctest::Approx(0.094288668018570859).epsilon(1e-12));
  CHECK(upper_doubling(g5, 100, 0).value ==
        doctest::Approx(0.033572236438962864).epsilon(1e-12));
  // kappa refinement beats the plain split whenever the halving ratio at the
  // split optimizer is below the saturation value 2
  for (const auto& d : {z5, g5})
    for (std::uint64_t n : {std::uint64_t{100}, std::uint64_t{1000}}) {
      const auto split = upper_split(d, n, 0);
      if (kappa(d, true, 2.0 * *split.optimizer_eps) <= 2.0)
        CHECK(upper_doubling(d, n, 0).value <= split.value + 1e-12);
    }
}

TEST_CASE("lower bounds: frozen values") {
  CHECK(lower_split(u10, 100, 0).value ==
        doctest::Approx(2.6561398887587476e-05).epsilon(1e-12));
  // kappa_minus path on an infinite support: value pinned loosely, the
  // optimizer grid may legitimately refine
  CHECK(lower_split(z5, 100, 0).value ==
        doctest::Approx(0.025099051801883349).epsilon(1e-3));
  CHECK(lower_split(g5, 100, 0).value ==
        doctest::Approx(3.944304526105045e-31).epsilon(1e-6));
  CHECK(lower_split(Distribution::dirac(), 5, 0).value == 0.0);
  CHECK(lower_envelope(z5, 1000, 0).value ==
        doctest::Approx(0.00053994663362315972).epsilon(1e-12));
  // lower bounds never exceed the exact value
  for (std::uint64_t n : {std::uint64_t{10}, std::uint64_t{100}, std::uint64_t{1000}}) {
    const double exact = exact_EM(z5, n, 0).value;
    CHECK(lower_split(z5, n, 0).value <= exact + 1e-10);
    const auto le = lower_envelope(z5, n, 0);
    if (le.applicable) CHECK(le.value <= exact + 1e-10);
  }
}

TEST_CASE("tightness at uniform: split lower meets the exact missing mass") {
  for (std::uint64_t m : {std::uint64_t{2}, std::uint64_t{10}, std::uint64_t{100}})
    for (std::uint64_t n : {std::uint64_t{10}, std::uint64_t{100}}) {
      const auto u = Distribution::uniform(m);
      const double closed = std::pow(1.0 - 1.0 / static_cast<double>(m), n);
      CHECK(lower_split(u, n, 0).value == doctest::Approx(closed).epsilon(1e-12));
      CHECK(accrual_bounds(u, n).first.value == doctest::Approx(closed).epsilon(1e-12));
      CHECK(exact_EM(u, n, 0).value == doctest::Approx(closed).epsilon(1e-12));
    }
}

TEST_CASE("accrual sandwich: frozen values and the enclosing property") {
  const auto [lo, hi] = accrual_bounds(z5, 100);
  CHECK(lo.value == doctest::Approx(0.034961256786298307).epsilon(1e-12));
  CHECK(hi.value == doctest::Approx(0.1553314456836512).epsilon(1e-12));
  const double exact = exact_EM(z5, 100, 0).value;
  CHECK(lo.value <= exact);
  CHECK(exact <= hi.value);
}

TEST_CASE("coarse missing-mass bound") {
  CHECK(upper_missing_mass(u10, 5).value ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-13));  // n <= |S|
  CHECK(upper_missing_mass(u10, 100).value ==
        doctest::Approx(10.0 / (100.0 * std::exp(1.0))).epsilon(1e-13));
  const auto g = upper_missing_mass(g5, 100);
  CHECK(g.value == doctest::Approx(0.01).epsilon(1e-13));
  CHECK_FALSE(g.certified);  // placeholder constant
  CHECK_FALSE(upper_missing_mass(z5, 100).applicable);  // halving increment diverges
}

TEST_CASE("two-sided power envelope bounds on a validated synthetic case") {
  const double zc = std::pow(z5.zipf_zeta(), -0.5);
  const auto [lo, hi] = accrual_powerlaw_bounds(0.5 * zc, zc, 0.5, 1000, z5, 0.15);
  REQUIRE(lo.applicable);
  REQUIRE(hi.applicable);
  CHECK(hi.value == doctest::Approx(0.10035659726481867).epsilon(1e-12));
  const double exact = exact_EM(z5, 1000, 0).value;
  CHECK(lo.value <= exact);
  CHECK(exact <= hi.value);
  // an envelope the law violates is rejected by the grid validation
  const auto bad = accrual_powerlaw_bounds(0.3, 0.9, 0.5, 1000, z5);
  CHECK_FALSE(bad.first.applicable);
  CHECK_FALSE(bad.second.applicable);
}

TEST_CASE("per-sample-size scaling certificate") {
  const auto sf = scaling_floor(z5, 100, 0);
  CHECK(sf.atom_rank == 8);
  CHECK(sf.k == 105);
  CHECK(sf.floor_value == doctest::Approx(0.36264292026742212).epsilon(1e-12));
  CHECK(sf.scaled_EM == doctest::Approx(7.2282513944091544).epsilon(1e-10));
  CHECK(sf.holds);
  const auto sg = scaling_floor(g5, 100, 0);
  CHECK(sg.k == 128);
  CHECK(sg.holds);
  for (std::uint64_t n : {std::uint64_t{10}, std::uint64_t{1000}}) {
    CHECK(scaling_floor(z5, n, 0).holds);
    CHECK(scaling_floor(g5, n, 0).holds);
  }
}

TEST_CASE("bound suite produces a consistent sandwich report") {
  for (const auto& d : {u10, z5, g5, Distribution::dirac()})
    for (std::uint64_t n : {std::uint64_t{2}, std::uint64_t{100}})
      for (std::uint64_t r : {std::uint64_t{0}, std::uint64_t{1}}) {
        if (r > n) continue;
        const auto rep = bound_suite(d, n, r);
        CHECK(rep.sandwich_ok);
        CHECK(rep.exact.lo <= rep.exact.hi);
        CHECK(rep.tightest_lower <= rep.exact.value + rep.slack);
        CHECK(rep.exact.value <= rep.tightest_upper + rep.slack);
        for (const auto& b : rep.results) {
          if (!b.applicable || !b.certified) continue;
          if (b.is_upper)
            CHECK(b.value >= rep.exact.value - rep.slack);
          else
            CHECK(b.value <= rep.exact.value + rep.slack);
        }
      }
}

TEST_CASE("inapplicable bounds carry their failed conditions") {
  const auto b = upper_support(z5, 100, 0);
  CHECK_FALSE(b.applicable);
  CHECK(std::isinf(b.value));
  bool failed_condition = false;
  for (const auto& c : b.conditions)
    if (!c.holds) failed_condition = true;
  CHECK(failed_condition);
  const auto j = b.to_json();
  CHECK(j.contains("conditions"));
  CHECK(j.at("applicable").get<bool>() == false);
}
