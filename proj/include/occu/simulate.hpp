#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "occu/distribution.hpp"
#include "occu/estimate.hpp"
#include "occu/exact.hpp"

namespace occu {

/** Replicate i draws from an independent stream seeded with
 *  mix64(master_seed + (i+1) * 0x9E3779B97F4A7C15) where mix64 is the
 *  splitmix64 finalizer, so streams are bit-identical regardless of
 *  execution order or thread count. */
struct SeedSpec {
  std::uint64_t master_seed = 1;
  std::uint64_t replicate_seed(std::uint64_t replicate) const;
};

/** n i.i.d. draws. Letters are atom ranks in decimal. Finite families use
 *  the alias method, geometric the exact analytic inverse CDF, zipf an
 *  inverse-CDF table plus certified tail search truncated at tail mass <=
 *  the law's truncation tolerance; the residue is one synthetic "overflow"
 *  letter carrying exactly that residual mass. Realized occupancy masses are
 *  attached. */
SampleSummary sample_counts(const Distribution& d, std::uint64_t n, const SeedSpec& seed,
                            std::uint64_t replicate);

/** Realized (K_{n,r}, M_{n,r}) of one sample from d. K_{n,0} needs finite
 *  support (the unseen count is infinite otherwise). M_{n,0} is one minus
 *  the seen mass, exact; masses are recomputed from the law when the summary
 *  does not carry them. */
std::pair<std::uint64_t, double> realized_KM(const Distribution& d,
                                             const SampleSummary& summary, std::uint64_t r);

struct MonteCarloResult {
  struct Row {
    std::uint64_t r = 0;
    double mean_K = 0.0;
    double se_K = 0.0;
    double mean_M = 0.0;
    double se_M = 0.0;
    double exact_EM = 0.0;
    double z_score = 0.0;
  };

  std::string dist_label;
  nlohmann::json dist_config;
  std::uint64_t n = 0;
  std::uint64_t replicates = 0;
  std::uint64_t master_seed = 0;
  double overflow_expected = 0.0;  // expected overflow-letter draws per replicate
  std::vector<Row> rows;
  std::optional<double> coverage_fraction;
  std::optional<ProbabilisticInterval> interval;

  std::string to_csv() const;
  nlohmann::json to_json() const;
};

/** Means and standard errors of realized K_{n,r} and M_{n,r} over N
 *  replicates, with the exact E M_{n,r} oracle and its z-score attached.
 *  Deterministic given the seed, also under concurrent replicates. */
MonteCarloResult monte_carlo(const Distribution& d, std::uint64_t n,
                             const std::vector<std::uint64_t>& r_set, std::uint64_t N,
                             const SeedSpec& seed, const ExactOptions& opts = {});

/** Fraction of replicates whose realized target lies in the deterministic
 *  concentration interval: M_{n,0} for the mass intervals, K_{n,r} for
 *  counts_bernstein. An inapplicable interval throws. */
MonteCarloResult coverage_experiment(const Distribution& d, std::uint64_t n, double t,
                                     std::uint64_t N, const SeedSpec& seed, IntervalMethod kind,
                                     std::uint64_t r = 0, const SuiteOptions& opts = {});

}  // namespace occu
