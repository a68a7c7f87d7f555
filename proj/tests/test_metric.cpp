#include <cmath>
#include <cstdint>
#include <vector>

#include <doctest.h>

#include "occu/exact.hpp"
#include "occu/metric.hpp"
#include "occu/simulate.hpp"

using namespace occu;

namespace {
MetricModel ten_points() {
  std::vector<double> xs, ms;
  for (int k = 0; k < 10; ++k) {
    xs.push_back(static_cast<double>(k));
    ms.push_back(0.1);
  }
  return MetricModel::point_set(xs, ms);
}
}  // namespace

TEST_CASE("ball masses: open balls with strict boundaries") {
  const auto uni = MetricModel::segment_uniform(0.0, 1.0);
  CHECK(uni.ball_mass(0.5, 0.25) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(uni.ball_mass(0.0, 0.25) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(uni.ball_mass(0.5, 2.0) == doctest::Approx(1.0).epsilon(1e-15));

  // dyadic coordinates make the strict inequality exact in doubles:
  // |0.375 - 0.125| = 0.25 is NOT < 0.25, so the point stays outside
  CHECK(xi_delta({0.125}, 0.375, 0.25) == 0);
  CHECK(xi_delta({0.125}, 0.375, 0.2500001) == 1);
  CHECK(xi_delta({0.1, 0.2, 0.9}, 0.15, 0.06) == 2);

  const auto pts = ten_points();
  CHECK(pts.ball_mass(0.0, 0.5) == 0.1);   // bit-exact single atom
  CHECK(pts.ball_mass(0.0, 1.5) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(pts.sup_ball_mass(0.5) == 0.1);
}

TEST_CASE("explicit distance matrices") {
  // triangle with one far vertex
  const std::vector<std::vector<double>> dist = {
      {0.0, 1.0, 5.0}, {1.0, 0.0, 5.0}, {5.0, 5.0, 0.0}};
  const auto m = MetricModel::point_set({0.0, 1.0, 2.0}, {0.5, 0.3, 0.2}, dist);
  CHECK(m.has_explicit_metric());
  CHECK(m.ball_mass(0.0, 1.5) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(m.ball_mass(2.0, 1.0) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK_THROWS_AS(MetricModel::point_set({0.0, 1.0}, {0.5, 0.5},
                                         {{0.0, 1.0}, {2.0, 0.0}}),
                  config_error);
}

TEST_CASE("neighborhood expectation: segment closed form") {
  const auto uni = MetricModel::segment_uniform(0.0, 1.0);
  // n = 1, r = 0: P(the second point misses B(x, 1/2)) integrated over x
  CHECK(exact_EM_delta(uni, 1, 0.5, 0) == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(exact_EM_delta(uni, 10, 0.1, 0) ==
        doctest::Approx(0.12733775504181868).epsilon(1e-9));
  // r sweep sums to 1
  double sum = 0.0;
  for (std::uint64_t r = 0; r <= 10; ++r) sum += exact_EM_delta(uni, 10, 0.1, r);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("separated atoms reduce to the discrete occupancy law") {
  const auto pts = ten_points();  // unit spacing, delta = 0.5 isolates each atom
  const auto u10 = Distribution::uniform(10);
  for (std::uint64_t r : {std::uint64_t{0}, std::uint64_t{1}, std::uint64_t{3}})
    CHECK(exact_EM_delta(pts, 100, 0.5, r) ==
          doctest::Approx(exact_EM(u10, 100, r).value).epsilon(1e-12));
  // poissonized variant matches as well
  CHECK(exact_EM_delta(pts, 0, 0.5, 0, 100.0) ==
        doctest::Approx(exact_EM_poisson(u10, 100.0, 0).value).epsilon(1e-12));
}

TEST_CASE("neighborhood counting function") {
  const auto uni = MetricModel::segment_uniform(0.0, 1.0);
  // nu_delta(0.5, 0.6) = 2 ln(1/0.6): ball mass g(x) crosses 0.6 linearly
  CHECK(nu_delta(uni, 0.5, 0.6) == doctest::Approx(2.0 * std::log(1.0 / 0.6)).epsilon(1e-9));
  CHECK(nu_delta(uni, 0.5, 1.5) == 0.0);

  // separated atoms: nu_delta equals the discrete counting function exactly
  const auto pts = ten_points();
  const auto u10 = Distribution::uniform(10);
  for (double eps : {0.05, 0.1, 0.100001, 0.5})
    CHECK(nu_delta(pts, 0.5, eps) == static_cast<double>(u10.counting_nu(eps)));

  // integral of u against the normalized neighborhood measure is always 1
  for (const auto& m : {MetricModel::segment_uniform(0.0, 2.0), ten_points()})
    CHECK(nu_delta_integral(m, 0.3, [](double u) { return u; }) ==
          doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("covering bound dominates the exact neighborhood expectation") {
  const auto uni = MetricModel::segment_uniform(0.0, 1.0);
  const auto pts = ten_points();
  for (std::uint64_t n : {std::uint64_t{10}, std::uint64_t{100}, std::uint64_t{1000}}) {
    for (const auto* m : {&uni, &pts})
      for (double delta : {0.1, 0.5}) {
        const auto b = cover_upper(*m, n, delta);
        REQUIRE(b.applicable);
        CHECK(b.value >= exact_EM_delta(*m, n, delta, 0) - 1e-10);
      }
  }
  // frozen: 10 isolated atoms covered by 10 balls -> 0 + 10/(100 e)
  CHECK(cover_upper(pts, 100, 0.5).value ==
        doctest::Approx(10.0 / (100.0 * std::exp(1.0))).epsilon(1e-12));
  CHECK(cover_upper(uni, 100, 0.1).value ==
        doctest::Approx(10.0 / (100.0 * std::exp(1.0))).epsilon(1e-12));
}

TEST_CASE("covering bound on an explicit metric uses the exact set cover") {
  const std::vector<std::vector<double>> dist = {
      {0.0, 1.0, 5.0}, {1.0, 0.0, 5.0}, {5.0, 5.0, 0.0}};
  const auto m = MetricModel::point_set({0.0, 1.0, 2.0}, {0.5, 0.3, 0.2}, dist);
  const auto b = cover_upper(m, 50, 4.0);
  REQUIRE(b.applicable);
  CHECK(b.value >= exact_EM_delta(m, 50, 4.0, 0) - 1e-10);
  // radius-2 balls: {0,1} fit in one ball, {2} needs its own -> N = 2
  bool saw_cover = false;
  for (const auto& c : b.conditions)
    if (c.name == "selected cover") saw_cover = true;
  CHECK(saw_cover);
}

TEST_CASE("user candidates are validated and rejections recorded") {
  const auto uni = MetricModel::segment_uniform(0.0, 1.0);
  // rho > delta/2 is inadmissible; t <= 0 likewise
  const auto b = cover_upper(uni, 100, 0.1,
                             {{0.5, 0.2, 0.3}, {0.5, 0.0, 0.05}, {0.5, 0.5, 0.05}});
  REQUIRE(b.applicable);  // the third candidate is valid
  std::uint64_t rejected = 0;
  for (const auto& c : b.conditions)
    if (!c.holds) ++rejected;
  CHECK(rejected == 2);
  CHECK(b.value >= exact_EM_delta(uni, 100, 0.1, 0) - 1e-10);
}

TEST_CASE("empirical neighborhood masses: atoms are exact") {
  const auto pts = ten_points();
  const auto sample = sample_counts(Distribution::uniform(10), 200, SeedSpec{3}, 0);
  // atom ranks 1..10 sit at coordinates 0..9
  std::vector<double> coords;
  for (const auto& [letter, count] : sample.histogram)
    for (std::uint64_t i = 0; i < count; ++i)
      coords.push_back(static_cast<double>(std::stoull(letter) - 1));
  const double em = M_delta_empirical(pts, coords, 0.5, 1, 0, SeedSpec{3});
  // compare to the realized discrete quantity
  double want = 0.0;
  for (const auto& [letter, count] : sample.histogram)
    if (count == 1) want += 0.1;
  CHECK(em == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("empirical neighborhood masses on a density stay near the oracle") {
  const auto uni = MetricModel::segment_uniform(0.0, 1.0);
  const std::uint64_t n = 60, probes = 400;
  // one uniform n-sample on [0,1] from a deterministic splitmix stream
  std::vector<double> coords;
  std::uint64_t state = 0x9e3779b97f4a7c15ULL;
  for (std::uint64_t i = 0; i < n; ++i) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    coords.push_back(uni.draw_unit(static_cast<double>(z >> 11) * 0x1.0p-53));
  }
  const double est = M_delta_empirical(uni, coords, 0.1, 0, probes, SeedSpec{777});
  const double exact = exact_EM_delta(uni, n, 0.1, 0);
  // probe-average noise at 400 probes stays well inside this margin
  CHECK(std::fabs(est - exact) <= 0.20);
}

TEST_CASE("model configs round trip with strict keys") {
  const auto pw = MetricModel::segment_piecewise({0.0, 0.5, 1.0}, {1.6, 0.4});
  const std::vector<std::vector<double>> dist = {{0.0, 2.0}, {2.0, 0.0}};
  for (const auto& m :
       {MetricModel::segment_uniform(-1.0, 3.0), pw, ten_points(),
        MetricModel::point_set({0.0, 1.0}, {0.7, 0.3}, dist)}) {
    const auto j = m.to_json();
    const auto back = MetricModel::from_json(j);
    CHECK(back.label() == m.label());
    CHECK(back.to_json() == j);
  }
  CHECK_THROWS_AS(MetricModel::from_json({{"space", "segment"}, {"a", 0.0}, {"b", 1.0},
                                          {"bogus", 1}}),
                  config_error);
  CHECK_THROWS_AS(MetricModel::from_json({{"space", "blob"}}), config_error);
  CHECK_THROWS_AS(MetricModel::segment_piecewise({0.0, 1.0}, {0.5}), config_error);
  CHECK_THROWS_AS(MetricModel::point_set({0.0, 0.0}, {0.5, 0.5}), config_error);
}
