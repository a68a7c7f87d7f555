#include <cmath>
#include <cstdint>
#include <vector>

#include <doctest.h>

#include "occu/exact.hpp"
#include "occu/poisson.hpp"

using namespace occu;

TEST_CASE("intensity functions: cumulative forms and config round trips") {
  const auto c = IntensityFn::constant(2.5);
  CHECK(c.cumulative(4.0) == doctest::Approx(10.0).epsilon(1e-15));
  const auto p = IntensityFn::power(3.0, 1.0);  // Lambda_t = 3 t^2 / 2
  CHECK(p.cumulative(2.0) == doctest::Approx(6.0).epsilon(1e-14));
  for (const auto& f : {c, p}) {
    const auto back = IntensityFn::from_json(f.to_json());
    CHECK(back.cumulative(1.7) == doctest::Approx(f.cumulative(1.7)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(IntensityFn::from_json({{"form", "constant"}, {"lambda", 1.0}, {"x", 2}}),
                  config_error);
  CHECK_THROWS_AS(IntensityFn::power(1.0, -1.0), domain_error);
  CHECK_THROWS_AS(IntensityFn::constant(-1.0), domain_error);
}

TEST_CASE("poissonized expectations: closed forms") {
  // Uniform(2) at Lambda = 2, r = 0: 2 * 0.5 * e^{-1} = e^{-1}
  CHECK(exact_EM_poisson(Distribution::uniform(2), 2.0, 0).value ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-13));
  // Uniform(m): m (Lambda/m)^r e^{-Lambda/m} / (r! m^... ) via direct formula
  for (std::uint64_t r : {std::uint64_t{0}, std::uint64_t{1}, std::uint64_t{3}}) {
    const double L = 100.0, m = 10.0;
    double fact = 1.0;
    for (std::uint64_t i = 2; i <= r; ++i) fact *= static_cast<double>(i);
    const double expect =
        std::pow(L, r) / fact * m * std::pow(1.0 / m, r + 1) * std::exp(-L / m);
    CHECK(exact_EM_poisson(Distribution::uniform(10), L, r).value ==
          doctest::Approx(expect).epsilon(1e-13));
  }
  CHECK(exact_EM_poisson(Distribution::uniform(10), 100.0, 0).value ==
        doctest::Approx(4.5399929762484875e-05).epsilon(1e-12));
  // dirac: e^{-Lambda} Lambda^r / r!
  CHECK(exact_EM_poisson(Distribution::dirac(), 3.0, 2).value ==
        doctest::Approx(4.5 * std::exp(-3.0)).epsilon(1e-13));
}

TEST_CASE("poissonized expectations: certified truncation on infinite supports") {
  const auto z5 = Distribution::zipf(0.5);
  const auto r100 = exact_EM_poisson(z5, 100.0, 0);
  CHECK(r100.value == doctest::Approx(0.069098321047077679).epsilon(1e-12));
  CHECK(r100.lo <= r100.value);
  CHECK(r100.value <= r100.hi);
  const auto big = exact_EM_poisson(z5, 1e6, 0);
  CHECK(big.value == doctest::Approx(0.0006909882989425785).epsilon(1e-11));
  CHECK(big.width() <= 1e-11 * big.value);
  const auto g = exact_EM_poisson(Distribution::geometric(0.5), 100.0, 1);
  CHECK(g.value == doctest::Approx(0.014425714170704049).epsilon(1e-12));
}

TEST_CASE("poissonized masses sum to one over r") {
  for (const auto& d : {Distribution::uniform(10), Distribution::zipf(0.5)}) {
    const double L = 50.0;
    double sum = 0.0;
    for (std::uint64_t r = 0; r <= 200; ++r) sum += exact_EM_poisson(d, L, r).value;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("poissonized upper bounds sandwich the exact value") {
  for (const auto& d : {Distribution::uniform(10), Distribution::zipf(0.5),
                        Distribution::geometric(0.5)})
    for (double L : {2.0, 10.0, 100.0, 1000.0})
      for (std::uint64_t r : {std::uint64_t{0}, std::uint64_t{1}, std::uint64_t{5}}) {
        const auto ex = exact_EM_poisson(d, L, r);
        const auto split = upper_poisson(d, L, r, PoissonBoundVariant::adaptive_split);
        REQUIRE(split.applicable);
        CHECK(split.value >= ex.hi - 1e-12);
        const auto env = upper_poisson(d, L, r, PoissonBoundVariant::envelope);
        if (env.applicable) CHECK(env.value >= ex.hi - 1e-12);
      }
}

TEST_CASE("poissonized bounds: frozen values") {
  const auto z5 = Distribution::zipf(0.5);
  const auto split = upper_poisson(z5, 100.0, 0, PoissonBoundVariant::adaptive_split);
  CHECK(split.value == doctest::Approx(0.21937274727969822).epsilon(1e-12));
  CHECK(*split.optimizer_eps == doctest::Approx(0.00067547455761558014).epsilon(1e-12));
  const auto env = upper_poisson(z5, 100.0, 0, PoissonBoundVariant::envelope);
  CHECK(env.value == doctest::Approx(0.40606780305437162).epsilon(1e-12));
  const auto gsplit =
      upper_poisson(Distribution::geometric(0.5), 100.0, 0, PoissonBoundVariant::adaptive_split);
  CHECK(gsplit.value == doctest::Approx(0.047263098494738837).epsilon(1e-12));
  // envelope relaxes the optimized split on power-law laws
  CHECK(env.value >= split.value);
  // envelope needs Lambda >= 1
  CHECK_FALSE(upper_poisson(z5, 0.5, 0, PoissonBoundVariant::envelope).applicable);
  // a flat (alpha = 0, constant ell) envelope qualifies too
  CHECK(upper_poisson(Distribution::uniform(10), 100.0, 0, PoissonBoundVariant::envelope)
            .applicable);
}

TEST_CASE("poissonized asymptotics at large intensity") {
  const auto z5 = Distribution::zipf(0.5);
  const double L = 1e6;
  const double exact = exact_EM_poisson(z5, L, 0).value;
  const double ref = asymptotic_reference(0.5, std::pow(z5.zipf_zeta(), -0.5), L, 0,
                                          AsymptoticKind::poisson_probabilities);
  CHECK(std::fabs(exact - ref) / ref < 0.1);
}

TEST_CASE("poisson draws: determinism and moments") {
  CHECK(poisson_draw(0.0, 123) == 0);
  CHECK(poisson_draw(5.0, 99) == poisson_draw(5.0, 99));
  for (double mu : {3.7, 1000.0}) {
    const int N = 4000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < N; ++i) {
      const double x = static_cast<double>(poisson_draw(mu, 0x5eedULL + i));
      sum += x;
      sq += x * x;
    }
    const double mean = sum / N;
    const double var = sq / N - mean * mean;
    CHECK(std::fabs(mean - mu) <= 4.0 * std::sqrt(mu / N));
    CHECK(std::fabs(var - mu) <= 4.0 * mu * std::sqrt(3.0 / N));
  }
}

TEST_CASE("poissonized sampling is deterministic with exact edge cases") {
  const auto d = Distribution::uniform(10);
  const auto intensity = IntensityFn::constant(50.0);
  const auto a = sample_poissonized(d, intensity, 1.0, SeedSpec{4}, 0);
  const auto b = sample_poissonized(d, intensity, 1.0, SeedSpec{4}, 0);
  CHECK(a.histogram == b.histogram);
  std::uint64_t total = 0;
  for (const auto& [r, k] : a.occupancy) total += r * k;
  CHECK(total == a.n);
  // zero accumulated intensity draws the empty sample: all mass unseen
  const auto empty = sample_poissonized(d, IntensityFn::constant(0.0), 5.0, SeedSpec{4}, 0);
  CHECK(empty.n == 0);
  CHECK(empty.realized_M.at(0) == 1.0);
}
