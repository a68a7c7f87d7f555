#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "occu/bounds.hpp"
#include "occu/distribution.hpp"
#include "occu/exact.hpp"

namespace occu {

/** Frequency summary of one sample. Letters are opaque strings; when the
 *  generating law is supplied they must be decimal atom ranks (1-based, by
 *  decreasing mass) so realized occupancy probabilities can be attached. */
struct SampleSummary {
  std::uint64_t n = 0;
  std::map<std::string, std::uint64_t> histogram;    // letter -> count
  std::map<std::uint64_t, std::uint64_t> occupancy;  // r -> K_{n,r}, r >= 1
  std::map<std::uint64_t, double> realized_M;        // r -> M_{n,r}; only with a law

  static SampleSummary from_histogram(std::map<std::string, std::uint64_t> hist);
  static SampleSummary from_histogram(std::map<std::string, std::uint64_t> hist,
                                      const Distribution& d);

  /** K_{n,r} for r >= 1 (letters seen exactly r times). */
  std::uint64_t occupancy_count(std::uint64_t r) const;

  nlohmann::json to_json() const;
  static SampleSummary from_json(const nlohmann::json& j);
};

/** One letter per non-empty line. */
std::map<std::string, std::uint64_t> read_token_histogram(const std::string& path);

/** Values of the named column of a headered CSV file. */
std::map<std::string, std::uint64_t> read_csv_histogram(const std::string& path,
                                                        const std::string& column);

/** (1+r) K_{n,1+r} / n. Needs r + 1 <= n. */
double turing(const SampleSummary& summary, std::uint64_t r);

/** Alternating bias-reduced estimate of the unseen mass,
 *  sum_{i=1..s} (-1)^{i+1} K_{n,i} / C(n,i). Needs 1 <= s <= n; s > 60 is
 *  rejected because the alternating sum loses all precision beyond that. */
double turing_modified(const SampleSummary& summary, std::uint64_t s);

struct EstimatorSpec {
  enum class Kind { turing, modified };
  Kind kind = Kind::turing;
  std::uint64_t s = 1;  // modified only

  static EstimatorSpec turing_spec() { return {Kind::turing, 1}; }
  static EstimatorSpec modified_spec(std::uint64_t s) { return {Kind::modified, s}; }
};

/** Exact estimator bias under the given law: for the plain estimator the
 *  target is M_{n,r} and the bias is E M_{n,r} - E M_{n-1,r}; for the
 *  modified family the target is M_{n,0} and the bias is
 *  (-1)^s E M_{n,s} / C(n,s). */
double bias_exact(const Distribution& d, std::uint64_t n, std::uint64_t r,
                  const EstimatorSpec& est, const ExactOptions& opts = {});

struct ProbabilisticInterval {
  double lower = 0.0;
  double upper = 0.0;
  double confidence_floor = 0.0;
  double t = 0.0;
  std::string source;
  bool applicable = true;
  std::vector<BoundCondition> conditions;
  std::string note;  // clip annotations and similar caveats

  nlohmann::json to_json() const;
};

enum class IntervalMethod {
  missing_mass,         // two-sided interval for M_{n,0} around certified bounds
  envelope_upper,       // one-sided upper interval for M_{n,0} from the counting envelope
  power_law_two_sided,  // closed-form two-sided interval for M_{n,0}, power-law families
  counts_bernstein,     // Bernstein-type interval for the count K_{n,r}
};

/** Deterministic concentration interval of the requested kind. Failed
 *  mathematical hypotheses yield an inapplicable record (never a throw);
 *  caller errors (r out of range, t <= 0) throw. */
ProbabilisticInterval concentration_interval(IntervalMethod method, const Distribution& d,
                                             std::uint64_t n, std::uint64_t r, double t,
                                             const SuiteOptions& opts = {});

}  // namespace occu
