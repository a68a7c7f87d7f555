#include "occu/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <unordered_map>

#include "occu/bounds.hpp"
#include "occu/errors.hpp"
#include "occu/kernels.hpp"
#include "occu/numerics.hpp"

namespace occu {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
constexpr double kRankExact = 9007199254740992.0;  // 2^53: last exactly representable rank

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

/** One i.i.d. draw as an atom rank; 0 denotes the zipf overflow letter.
 *  Ranks <= 2^53 are exact; deeper zipf ranks (per-atom mass < 1e-22) use
 *  the closed-form Euler-Maclaurin inverse and carry the nearest
 *  representable integer. */
class Sampler {
 public:
  explicit Sampler(const Distribution& d) : d_(d) {
    switch (d.family()) {
      case Family::zipf:
        init_zipf();
        break;
      case Family::finite_explicit:
        init_alias();
        break;
      default:
        break;
    }
  }

  double overflow_mass() const { return m_ovf_; }

  double draw_rank(SplitMix64& rng) const {
    switch (d_.family()) {
      case Family::dirac:
        return 1.0;
      case Family::uniform: {
        const double m = static_cast<double>(d_.support_size());
        return 1.0 + std::min(m - 1.0, std::floor(rng.unit() * m));
      }
      case Family::geometric: {
        const double u = rng.unit();
        const double k = std::ceil(std::log1p(-u) / std::log(d_.geometric_q()));
        return std::max(1.0, k);
      }
      case Family::finite_explicit:
        return draw_alias(rng);
      case Family::zipf:
        return draw_zipf(rng);
    }
    throw domain_error("unknown family");
  }

  SampleSummary draw_summary(std::uint64_t n, SplitMix64 rng) const;

 private:
  void init_alias() {
    const std::uint64_t dc = d_.distinct_count();
    std::vector<double> scaled(dc);
    base_.resize(dc);
    mult_.resize(dc);
    std::uint64_t base = 0;
    double total = 0.0;
    for (std::uint64_t i = 0; i < dc; ++i) {
      base_[i] = base;
      mult_[i] = d_.multiplicity_of_distinct(i);
      base += mult_[i];
      scaled[i] = d_.distinct_mass(i) * static_cast<double>(mult_[i]);
      total += scaled[i];
    }
    for (double& w : scaled) w *= static_cast<double>(dc) / total;
    prob_.assign(dc, 1.0);
    alias_.assign(dc, 0);
    std::vector<std::uint64_t> small, large;
    for (std::uint64_t i = 0; i < dc; ++i) (scaled[i] < 1.0 ? small : large).push_back(i);
    while (!small.empty() && !large.empty()) {
      const std::uint64_t l = small.back();
      const std::uint64_t g = large.back();
      small.pop_back();
      large.pop_back();
      prob_[l] = scaled[l];
      alias_[l] = g;
      scaled[g] = (scaled[g] + scaled[l]) - 1.0;
      (scaled[g] < 1.0 ? small : large).push_back(g);
    }
  }

  double draw_alias(SplitMix64& rng) const {
    const std::uint64_t dc = prob_.size();
    std::uint64_t i = std::min<std::uint64_t>(
        dc - 1, static_cast<std::uint64_t>(rng.unit() * static_cast<double>(dc)));
    if (rng.unit() >= prob_[i]) i = alias_[i];
    const std::uint64_t m = mult_[i];
    std::uint64_t off = 0;
    if (m > 1)
      off = std::min<std::uint64_t>(
          m - 1, static_cast<std::uint64_t>(rng.unit() * static_cast<double>(m)));
    return static_cast<double>(base_[i] + off + 1);
  }

  void init_zipf() {
    s_ = 1.0 / d_.zipf_alpha();
    z_ = d_.zipf_zeta();
    const double tol = d_.truncation_tol();
    const std::uint64_t cap = 1ull << 53;
    if (d_.tail_mass_after(cap) <= tol) {
      std::uint64_t lo = 1, hi = cap;  // smallest k with tail(k) <= tol
      while (hi - lo > 0) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        if (d_.tail_mass_after(mid) <= tol)
          hi = mid;
        else
          lo = mid + 1;
      }
      k_max_ = hi;
      x_ovf_ = static_cast<double>(hi);
      m_ovf_ = d_.tail_mass_after(hi);
    } else {
      k_max_ = cap;
      x_ovf_ = std::exp(-std::log((s_ - 1.0) * z_ * tol) / (s_ - 1.0));
      m_ovf_ = tail_real(x_ovf_);
    }
    const std::uint64_t table = std::min<std::uint64_t>(k_max_, 65536);
    cum_.resize(table);
    double sum = 0.0, comp = 0.0;
    for (std::uint64_t k = 1; k <= table; ++k) {
      const double y = std::exp(-s_ * std::log(static_cast<double>(k))) / z_ - comp;
      const double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
      cum_[k - 1] = sum;
    }
  }

  // sum_{k > x} k^-s / z for real x, Euler-Maclaurin (x >= 2^53 here, so the
  // omitted corrections are below 1e-30 relative).
  double tail_real(double x) const {
    const double t1 = std::exp((1.0 - s_) * std::log(x)) / (s_ - 1.0);
    const double t2 = -0.5 * std::exp(-s_ * std::log(x));
    return (t1 + t2) / z_;
  }

  double draw_zipf(SplitMix64& rng) const {
    const double u = rng.unit();
    const double v = 1.0 - u;
    if (v <= m_ovf_) return 0.0;
    if (u < cum_.back()) {
      const auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
      return static_cast<double>((it - cum_.begin()) + 1);
    }
    std::uint64_t lo = cum_.size();
    if (d_.tail_mass_after(lo) <= v) return static_cast<double>(lo);
    if (k_max_ == (1ull << 53) && tail_real(static_cast<double>(k_max_)) > v) {
      // deeper than any exactly representable rank: closed-form inverse
      const double x = std::exp(-std::log((s_ - 1.0) * z_ * v) / (s_ - 1.0));
      return std::floor(std::min(x, x_ovf_));
    }
    std::uint64_t hi = k_max_;  // smallest k with tail(k) <= v lies in (lo, hi]
    while (hi - lo > 1) {
      const std::uint64_t mid = lo + (hi - lo) / 2;
      if (d_.tail_mass_after(mid) <= v)
        hi = mid;
      else
        lo = mid;
    }
    return static_cast<double>(hi);
  }

  const Distribution& d_;
  // finite_explicit alias table over distinct atoms
  std::vector<double> prob_;
  std::vector<std::uint64_t> alias_, base_, mult_;
  // zipf inverse-CDF state
  double s_ = 0.0, z_ = 0.0;
  std::vector<double> cum_;
  std::uint64_t k_max_ = 0;
  double x_ovf_ = 0.0;
  double m_ovf_ = 0.0;
};

SampleSummary Sampler::draw_summary(std::uint64_t n, SplitMix64 rng) const {
  std::unordered_map<std::uint64_t, std::uint64_t> counts;
  std::map<double, std::uint64_t> deep;
  std::uint64_t ovf = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const double rk = draw_rank(rng);
    if (rk == 0.0)
      ++ovf;
    else if (rk <= kRankExact)
      ++counts[static_cast<std::uint64_t>(rk)];
    else
      ++deep[rk];
  }
  SampleSummary s;
  s.n = n;
  double seen = 0.0, comp = 0.0;
  const auto add_seen = [&](double p) {
    const double y = p - comp;
    const double t = seen + y;
    comp = (t - seen) - y;
    seen = t;
  };
  for (const auto& [rank, count] : counts) {
    s.histogram[std::to_string(rank)] = count;
    s.occupancy[count] += 1;
    const double p = d_.mass_by_rank(rank);
    s.realized_M[count] += p;
    add_seen(p);
  }
  char buf[160];
  for (const auto& [rank, count] : deep) {
    std::snprintf(buf, sizeof(buf), "%.0f", rank);
    s.histogram[buf] = count;
    s.occupancy[count] += 1;
    const double p = std::exp(-s_ * std::log(rank)) / z_;
    s.realized_M[count] += p;
    add_seen(p);
  }
  if (ovf > 0) {
    s.histogram["overflow"] = ovf;
    s.occupancy[ovf] += 1;
    s.realized_M[ovf] += m_ovf_;
    add_seen(m_ovf_);
  }
  s.realized_M[0] = std::max(0.0, 1.0 - seen);
  return s;
}

double realized_M_value(const SampleSummary& s, std::uint64_t r) {
  const auto it = s.realized_M.find(r);
  return it == s.realized_M.end() ? 0.0 : it->second;
}

double realized_K_value(const Distribution& d, const SampleSummary& s, std::uint64_t r) {
  if (r >= 1) return static_cast<double>(s.occupancy_count(r));
  if (!d.finite_support()) return std::numeric_limits<double>::quiet_NaN();
  std::uint64_t distinct = 0;
  for (const auto& [rr, k] : s.occupancy) {
    (void)rr;
    distinct += k;
  }
  return static_cast<double>(d.support_size() - distinct);
}

struct MeanSE {
  double mean, se;
};

MeanSE mean_se(const std::vector<double>& v) {
  const std::uint64_t N = v.size();
  const double mean = kern::blocked_sum_serial(N, [&](std::uint64_t i) { return v[i]; }) /
                      static_cast<double>(N);
  const double ss = kern::blocked_sum_serial(N, [&](std::uint64_t i) {
    const double dd = v[i] - mean;
    return dd * dd;
  });
  if (std::isnan(ss)) return {mean, ss};
  return {mean, std::sqrt(std::max(0.0, ss) / (static_cast<double>(N) * (N - 1.0)))};
}

}  // namespace

std::uint64_t SeedSpec::replicate_seed(std::uint64_t replicate) const {
  return mix64(master_seed + kGolden * (replicate + 1));
}

SampleSummary sample_counts(const Distribution& d, std::uint64_t n, const SeedSpec& seed,
                            std::uint64_t replicate) {
  if (n == 0) throw domain_error("sample_counts needs n >= 1");
  const Sampler smp(d);
  return smp.draw_summary(n, SplitMix64(seed.replicate_seed(replicate)));
}

std::pair<std::uint64_t, double> realized_KM(const Distribution& d, const SampleSummary& summary,
                                             std::uint64_t r) {
  const SampleSummary* src = &summary;
  SampleSummary rebuilt;
  if (summary.realized_M.empty()) {
    rebuilt = SampleSummary::from_histogram(summary.histogram, d);
    src = &rebuilt;
  }
  std::uint64_t K = 0;
  if (r >= 1) {
    K = src->occupancy_count(r);
  } else {
    if (!d.finite_support())
      throw domain_error("the unseen-letter count is infinite on infinite support");
    std::uint64_t distinct = 0;
    for (const auto& [rr, k] : src->occupancy) {
      (void)rr;
      distinct += k;
    }
    K = d.support_size() - distinct;
  }
  return {K, realized_M_value(*src, r)};
}

MonteCarloResult monte_carlo(const Distribution& d, std::uint64_t n,
                             const std::vector<std::uint64_t>& r_set, std::uint64_t N,
                             const SeedSpec& seed, const ExactOptions& opts) {
  if (n == 0) throw domain_error("monte_carlo needs n >= 1");
  if (N < 2) throw domain_error("monte_carlo needs N >= 2");
  for (const std::uint64_t r : r_set)
    if (r > n) throw domain_error("monte_carlo needs r <= n");

  const Sampler smp(d);
  const std::size_t R = r_set.size();
  std::vector<std::vector<double>> Kv(R, std::vector<double>(N));
  std::vector<std::vector<double>> Mv(R, std::vector<double>(N));
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(N); ++i) {
    const SampleSummary s =
        smp.draw_summary(n, SplitMix64(seed.replicate_seed(static_cast<std::uint64_t>(i))));
    for (std::size_t j = 0; j < R; ++j) {
      Kv[j][static_cast<std::uint64_t>(i)] = realized_K_value(d, s, r_set[j]);
      Mv[j][static_cast<std::uint64_t>(i)] = realized_M_value(s, r_set[j]);
    }
  }

  MonteCarloResult out;
  out.dist_label = d.label();
  out.dist_config = d.to_json();
  out.n = n;
  out.replicates = N;
  out.master_seed = seed.master_seed;
  out.overflow_expected = static_cast<double>(n) * smp.overflow_mass();
  for (std::size_t j = 0; j < R; ++j) {
    MonteCarloResult::Row row;
    row.r = r_set[j];
    const MeanSE mk = mean_se(Kv[j]);
    const MeanSE mm = mean_se(Mv[j]);
    row.mean_K = mk.mean;
    row.se_K = mk.se;
    row.mean_M = mm.mean;
    row.se_M = mm.se;
    row.exact_EM = exact_EM(d, n, r_set[j], opts).value;
    const double diff = row.mean_M - row.exact_EM;
    row.z_score = row.se_M > 0.0
                      ? diff / row.se_M
                      : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    out.rows.push_back(row);
  }
  return out;
}

MonteCarloResult coverage_experiment(const Distribution& d, std::uint64_t n, double t,
                                     std::uint64_t N, const SeedSpec& seed, IntervalMethod kind,
                                     std::uint64_t r, const SuiteOptions& opts) {
  if (n == 0) throw domain_error("coverage_experiment needs n >= 1");
  if (N < 2) throw domain_error("coverage_experiment needs N >= 2");
  ProbabilisticInterval pi = concentration_interval(kind, d, n, r, t, opts);
  if (!pi.applicable) {
    std::string why = "interval inapplicable";
    for (const auto& c : pi.conditions)
      if (!c.holds) {
        why += ": " + c.name;
        break;
      }
    throw domain_error(why);
  }
  const bool count_target = (kind == IntervalMethod::counts_bernstein);

  const Sampler smp(d);
  std::vector<double> vals(N), inside(N);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(N); ++i) {
    const SampleSummary s =
        smp.draw_summary(n, SplitMix64(seed.replicate_seed(static_cast<std::uint64_t>(i))));
    const double x = count_target ? realized_K_value(d, s, r) : realized_M_value(s, 0);
    vals[static_cast<std::uint64_t>(i)] = x;
    inside[static_cast<std::uint64_t>(i)] = (x >= pi.lower && x <= pi.upper) ? 1.0 : 0.0;
  }

  MonteCarloResult out;
  out.dist_label = d.label();
  out.dist_config = d.to_json();
  out.n = n;
  out.replicates = N;
  out.master_seed = seed.master_seed;
  out.overflow_expected = static_cast<double>(n) * smp.overflow_mass();
  MonteCarloResult::Row row;
  row.r = r;
  const MeanSE ms = mean_se(vals);
  if (count_target) {
    row.mean_K = ms.mean;
    row.se_K = ms.se;
    row.mean_M = std::numeric_limits<double>::quiet_NaN();
    row.se_M = std::numeric_limits<double>::quiet_NaN();
    row.exact_EM = std::numeric_limits<double>::quiet_NaN();
    row.z_score = std::numeric_limits<double>::quiet_NaN();
  } else {
    row.mean_M = ms.mean;
    row.se_M = ms.se;
    row.mean_K = std::numeric_limits<double>::quiet_NaN();
    row.se_K = std::numeric_limits<double>::quiet_NaN();
    row.exact_EM = exact_EM(d, n, 0, opts.exact_opts).value;
    const double diff = row.mean_M - row.exact_EM;
    row.z_score = row.se_M > 0.0
                      ? diff / row.se_M
                      : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  }
  out.rows.push_back(row);
  out.coverage_fraction =
      kern::blocked_sum_serial(N, [&](std::uint64_t i) { return inside[i]; }) /
      static_cast<double>(N);
  out.interval = pi;
  return out;
}

std::string MonteCarloResult::to_csv() const {
  std::string out = "dist,n,r,N,mean_K,se_K,mean_M,se_M,exact_EM,z_score\n";
  char line[512];
  for (const auto& row : rows) {
    std::snprintf(line, sizeof(line),
                  "%s,%llu,%llu,%llu,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", dist_label.c_str(),
                  static_cast<unsigned long long>(n), static_cast<unsigned long long>(row.r),
                  static_cast<unsigned long long>(replicates), row.mean_K, row.se_K, row.mean_M,
                  row.se_M, row.exact_EM, row.z_score);
    out += line;
  }
  return out;
}

nlohmann::json MonteCarloResult::to_json() const {
  nlohmann::json rws = nlohmann::json::array();
  for (const auto& row : rows)
    rws.push_back({{"r", row.r},
                   {"mean_K", json_real(row.mean_K)},
                   {"se_K", json_real(row.se_K)},
                   {"mean_M", json_real(row.mean_M)},
                   {"se_M", json_real(row.se_M)},
                   {"exact_EM", json_real(row.exact_EM)},
                   {"z_score", json_real(row.z_score)}});
  nlohmann::json j{{"dist", dist_label},
                   {"config", dist_config},
                   {"n", n},
                   {"replicates", replicates},
                   {"seed", master_seed},
                   {"overflow_expected", overflow_expected},
                   {"rows", rws}};
  if (coverage_fraction) j["coverage_fraction"] = *coverage_fraction;
  if (interval) j["interval"] = interval->to_json();
  return j;
}

}  // namespace occu
