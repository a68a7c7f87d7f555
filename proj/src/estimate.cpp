#include "occu/estimate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <utility>

#include "occu/errors.hpp"
#include "occu/numerics.hpp"

namespace occu {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string str(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

std::uint64_t parse_rank(const std::string& letter) {
  std::uint64_t k = 0;
  const char* begin = letter.data();
  const char* end = begin + letter.size();
  auto [ptr, ec] = std::from_chars(begin, end, k);
  if (ec != std::errc{} || ptr != end || k == 0)
    throw config_error("letter '" + letter +
                       "' is not a 1-based atom rank; realized occupancy masses need "
                       "rank-labelled samples");
  return k;
}

ProbabilisticInterval interval_base(const char* source, double t) {
  ProbabilisticInterval pi;
  pi.source = source;
  pi.t = t;
  pi.upper = kInf;
  return pi;
}

bool require(ProbabilisticInterval& pi, bool holds, const std::string& name,
             const std::string& detail) {
  pi.conditions.push_back({name, holds, detail});
  if (!holds) {
    pi.applicable = false;
    pi.lower = 0.0;
    pi.upper = kInf;
    pi.confidence_floor = 0.0;
  }
  return holds;
}

void check_depth(std::uint64_t s, std::uint64_t n) {
  if (s < 1 || s > n) throw domain_error("estimator depth needs 1 <= s <= n");
  if (s > 60)
    throw domain_error(
        "estimator depth above 60 is unsupported: the alternating sum has no "
        "relative accuracy left");
}

}  // namespace

SampleSummary SampleSummary::from_histogram(std::map<std::string, std::uint64_t> hist) {
  SampleSummary s;
  for (auto it = hist.begin(); it != hist.end();) {
    if (it->second == 0) {
      it = hist.erase(it);
      continue;
    }
    s.n += it->second;
    s.occupancy[it->second] += 1;
    ++it;
  }
  s.histogram = std::move(hist);
  return s;
}

SampleSummary SampleSummary::from_histogram(std::map<std::string, std::uint64_t> hist,
                                            const Distribution& d) {
  SampleSummary s = from_histogram(std::move(hist));
  double seen = 0.0;
  double comp = 0.0;
  for (const auto& [letter, count] : s.histogram) {
    const double p = d.mass_by_rank(parse_rank(letter));
    s.realized_M[count] += p;
    const double y = p - comp;
    const double next = seen + y;
    comp = (next - seen) - y;
    seen = next;
  }
  s.realized_M[0] = std::max(0.0, 1.0 - seen);
  return s;
}

std::uint64_t SampleSummary::occupancy_count(std::uint64_t r) const {
  if (r == 0)
    throw domain_error("the number of unseen letters is not derivable from a sample summary");
  auto it = occupancy.find(r);
  return it == occupancy.end() ? 0 : it->second;
}

nlohmann::json SampleSummary::to_json() const {
  nlohmann::json occ = nlohmann::json::object();
  for (const auto& [r, k] : occupancy) occ[std::to_string(r)] = k;
  nlohmann::json j{{"n", n}, {"histogram", histogram}, {"occupancy", occ}};
  if (!realized_M.empty()) {
    nlohmann::json rm = nlohmann::json::object();
    for (const auto& [r, m] : realized_M) rm[std::to_string(r)] = m;
    j["realized_M"] = rm;
  }
  return j;
}

SampleSummary SampleSummary::from_json(const nlohmann::json& j) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "n" && key != "histogram" && key != "occupancy" && key != "realized_M")
      throw config_error("unknown sample summary key: " + key);
  }
  if (!j.contains("histogram") || !j.at("histogram").is_object())
    throw config_error("sample summary needs a histogram object");
  std::map<std::string, std::uint64_t> hist;
  for (const auto& [letter, count] : j.at("histogram").items()) {
    if (!count.is_number_unsigned())
      throw config_error("histogram counts must be non-negative integers");
    hist[letter] = count.get<std::uint64_t>();
  }
  SampleSummary s = from_histogram(std::move(hist));
  if (j.contains("n") && j.at("n").get<std::uint64_t>() != s.n)
    throw config_error("sample summary n disagrees with its histogram");
  if (j.contains("occupancy")) {
    std::map<std::uint64_t, std::uint64_t> occ;
    for (const auto& [r, k] : j.at("occupancy").items())
      occ[std::stoull(r)] = k.get<std::uint64_t>();
    if (occ != s.occupancy)
      throw config_error("sample summary occupancy disagrees with its histogram");
  }
  if (j.contains("realized_M"))
    for (const auto& [r, m] : j.at("realized_M").items())
      s.realized_M[std::stoull(r)] = m.get<double>();
  return s;
}

std::map<std::string, std::uint64_t> read_token_histogram(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open token file: " + path);
  std::map<std::string, std::uint64_t> hist;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++hist[line];
  }
  return hist;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace

std::map<std::string, std::uint64_t> read_csv_histogram(const std::string& path,
                                                        const std::string& column) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open csv file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw io_error("csv file is empty: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_fields(line);
  std::size_t col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == column) col = i;
  if (col == header.size()) throw io_error("csv file has no column '" + column + "'");
  std::map<std::string, std::uint64_t> hist;
  std::uint64_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != header.size())
      throw io_error("csv row " + std::to_string(row) + " has " +
                     std::to_string(fields.size()) + " fields, expected " +
                     std::to_string(header.size()));
    if (!fields[col].empty()) ++hist[fields[col]];
  }
  return hist;
}

double turing(const SampleSummary& summary, std::uint64_t r) {
  if (r + 1 > summary.n) throw domain_error("estimator needs r + 1 <= n");
  const double k = static_cast<double>(summary.occupancy_count(r + 1));
  return (1.0 + static_cast<double>(r)) * k / static_cast<double>(summary.n);
}

double turing_modified(const SampleSummary& summary, std::uint64_t s) {
  check_depth(s, summary.n);
  double total = 0.0;
  for (std::uint64_t i = 1; i <= s; ++i) {
    const std::uint64_t k = summary.occupancy_count(i);
    if (k == 0) continue;
    const double term =
        std::exp(std::log(static_cast<double>(k)) - num::log_binom(summary.n, i));
    total += (i % 2 == 1) ? term : -term;
  }
  return total;
}

double bias_exact(const Distribution& d, std::uint64_t n, std::uint64_t r,
                  const EstimatorSpec& est, const ExactOptions& opts) {
  if (est.kind == EstimatorSpec::Kind::turing) {
    if (n < 2) throw domain_error("estimator bias needs n >= 2");
    if (r + 1 > n) throw domain_error("estimator needs r + 1 <= n");
    return exact_EM(d, n, r, opts).value - exact_EM(d, n - 1, r, opts).value;
  }
  if (r != 0)
    throw domain_error("the bias-reduced family estimates the unseen mass; r must be 0");
  check_depth(est.s, n);
  const double em = exact_EM(d, n, est.s, opts).value;
  const double mag = em <= 0.0 ? 0.0 : std::exp(std::log(em) - num::log_binom(n, est.s));
  return (est.s % 2 == 0) ? mag : -mag;
}

nlohmann::json ProbabilisticInterval::to_json() const {
  nlohmann::json conds = nlohmann::json::array();
  for (const auto& c : conditions)
    conds.push_back({{"name", c.name}, {"holds", c.holds}, {"detail", c.detail}});
  nlohmann::json j{{"lower", json_real(lower)},
                   {"upper", json_real(upper)},
                   {"confidence_floor", confidence_floor},
                   {"t", t},
                   {"source", source},
                   {"applicable", applicable},
                   {"conditions", conds}};
  if (!note.empty()) j["note"] = note;
  return j;
}

namespace {

ProbabilisticInterval interval_missing_mass(const Distribution& d, std::uint64_t n, double t,
                                            const SuiteOptions& opts) {
  ProbabilisticInterval pi = interval_base("missing_mass", t);
  const BoundReport rep = bound_suite(d, n, 0, opts);
  pi.conditions.push_back({"certified unseen-mass bounds", true,
                           "E M_{n,0} in [" + str(rep.tightest_lower) + ", " +
                               str(rep.tightest_upper) + "] from " +
                               rep.tightest_lower_source + " / " + rep.tightest_upper_source});
  const double dn = static_cast<double>(n);
  pi.lower = rep.tightest_lower - std::sqrt(2.0 * t / (dn * std::exp(1.0)));
  pi.upper = rep.tightest_upper + std::sqrt(t / dn);
  pi.confidence_floor = 1.0 - 2.0 * std::exp(-t);
  pi.conditions.push_back({"deviation widths", true,
                           "downward sqrt(2t/(ne)) and upward sqrt(t/n), each at floor "
                           "1 - e^-t; the two-sided floor is 1 - 2e^-t"});
  if (pi.lower < 0.0)
    pi.note = "lower endpoint is negative and reported as computed; 0 always applies";
  return pi;
}

ProbabilisticInterval interval_envelope_upper(const Distribution& d, std::uint64_t n, double t,
                                              const SuiteOptions& opts) {
  (void)opts;
  ProbabilisticInterval pi = interval_base("envelope_upper", t);
  const BoundResult env = upper_envelope(d, n, 0, EnvelopeVariant::direct);
  pi.conditions.insert(pi.conditions.end(), env.conditions.begin(), env.conditions.end());
  if (!env.applicable) {
    pi.applicable = false;
    return pi;
  }
  const double dn = static_cast<double>(n);
  pi.lower = 0.0;
  pi.upper = env.value + std::sqrt(t / dn);
  pi.confidence_floor = 1.0 - std::exp(-t);
  pi.conditions.push_back({"deviation width", true, "one-sided, upward sqrt(t/n)"});
  return pi;
}

ProbabilisticInterval interval_power_law(const Distribution& d, std::uint64_t n, double t,
                                         const SuiteOptions& opts) {
  (void)opts;
  ProbabilisticInterval pi = interval_base("power_law_two_sided", t);
  if (!require(pi, d.family() == Family::zipf, "power-law family",
               "closed-form constants are derived for the zipf family"))
    return pi;
  const double alpha = d.zipf_alpha();
  const double dn = static_cast<double>(n);
  const double n_floor = std::max(2.0, std::pow(2.0, 1.0 / alpha) * d.zipf_zeta());
  require(pi, dn >= n_floor,
          "sample size floor", "needs n >= max(2, 2^{1/alpha} zeta(1/alpha)) = " + str(n_floor));

  const double cap = (std::pow(2.0, alpha) + 1.0) / std::pow(2.0, alpha + 1.0);
  double km = std::numeric_limits<double>::quiet_NaN();
  if (n >= 2) km = kappa(d, false, 2.0 / dn);
  require(pi, km <= cap, "halving ratio control",
          "kappa_-(2/n) = " + str(km) + " must stay <= (2^a + 1)/2^{a+1} = " + str(cap));

  bool integral_ok = false;
  if (n >= 2) {
    const double t0 = 1e-3;
    const auto f = [&](double u) {
      return std::pow(u, -alpha) * std::exp(dn * std::log1p(-u / dn));
    };
    const double head =
        std::exp(dn * std::log1p(-t0 / dn)) * std::pow(t0, 1.0 - alpha) / (1.0 - alpha);
    const double lhs = head + num::adaptive_simpson(f, t0, 2.0, 1e-9);
    integral_ok = lhs >= num::lower_incomplete_gamma(1.0 - alpha, 2.0) / 2.0;
  }
  require(pi, integral_ok, "kernel mass retention",
          "int_0^2 u^-a (1-u/n)^n du must keep half of gamma(1-a, 2)");
  if (!pi.applicable) return pi;

  const double rate = std::pow(d.zipf_zeta(), -alpha) / std::pow(dn, 1.0 - alpha);
  const double lo_core =
      (std::pow(2.0, alpha) - 1.0) * num::lower_incomplete_gamma(1.0 - alpha, 2.0) / 32.0 * rate;
  const double hi_core =
      (std::exp(-1.0) + 4.0 * num::lower_incomplete_gamma(1.0 - alpha, 0.5)) * rate;
  pi.lower = lo_core - std::sqrt(2.0 * t / (dn * std::exp(1.0)));
  pi.upper = hi_core + std::sqrt(t / dn);
  pi.confidence_floor = 1.0 - 2.0 * std::exp(-t);
  if (pi.lower < 0.0)
    pi.note = "lower endpoint is negative and reported as computed; 0 always applies";
  return pi;
}

ProbabilisticInterval interval_counts_bernstein(const Distribution& d, std::uint64_t n,
                                                std::uint64_t r, double t,
                                                const SuiteOptions& opts) {
  ProbabilisticInterval pi = interval_base("counts_bernstein", t);
  if (!require(pi, r >= 1 || d.finite_support(), "finite count moments",
               "E K_{n,0} is infinite on infinite support"))
    return pi;
  const double dn = static_cast<double>(n);
  const ExactResult ek_at = exact_EK_atleast(d, n, r, opts.exact_opts);
  const ExactResult ek_r = exact_EK(d, n, r, opts.exact_opts);
  const double grow = (r + 1 <= n)
                          ? (1.0 + static_cast<double>(r)) *
                                exact_EK(d, n, r + 1, opts.exact_opts).hi
                          : 0.0;
  const double at_exact = (r == 0) ? 0.0 : static_cast<double>(r) * ek_r.hi;
  const double v_plus = 2.0 * std::min(ek_at.hi, std::max(at_exact, grow));
  pi.conditions.push_back(
      {"variance proxy", true, "v+ = 2 min{E K_{n,>=r}, max{r E K_{n,r}, (1+r) E K_{n,1+r}}} = " +
                                   str(v_plus)});

  double k_lo = 0.0;
  double k_hi = 0.0;
  if (r >= 1) {
    if (!require(pi, n >= 2, "transfer sample size",
                 "bounding E K_{n,r} through E M_{n-1,r-1} needs n >= 2"))
      return pi;
    const BoundReport rep = bound_suite(d, n - 1, r - 1, opts);
    const double scale = dn / static_cast<double>(r);
    k_lo = rep.tightest_lower * scale;
    k_hi = rep.tightest_upper * scale;
    pi.conditions.push_back({"count bounds", true,
                             "E K_{n,r} in [" + str(k_lo) + ", " + str(k_hi) +
                                 "] via (n/r) E M_{n-1,r-1} from " + rep.tightest_lower_source +
                                 " / " + rep.tightest_upper_source});
  } else {
    k_lo = ek_r.lo;
    k_hi = ek_r.hi;
    pi.conditions.push_back(
        {"count bounds", true,
         "E K_{n,0} in [" + str(k_lo) + ", " + str(k_hi) + "] by exact evaluation"});
  }
  const double width = std::sqrt(4.0 * v_plus * t) + 2.0 * t / 3.0;
  pi.lower = k_lo - width;
  pi.upper = k_hi + width;
  if (pi.lower < 0.0) {
    pi.lower = 0.0;
    pi.note = "lower endpoint clipped at 0";
  }
  pi.confidence_floor = 1.0 - 4.0 * std::exp(-t);
  return pi;
}

}  // namespace

ProbabilisticInterval concentration_interval(IntervalMethod method, const Distribution& d,
                                             std::uint64_t n, std::uint64_t r, double t,
                                             const SuiteOptions& opts) {
  if (n < 1) throw domain_error("concentration interval needs n >= 1");
  if (r > n) throw domain_error("concentration interval needs r <= n");
  if (!(t > 0.0) || !std::isfinite(t))
    throw domain_error("concentration interval needs t > 0");
  switch (method) {
    case IntervalMethod::missing_mass:
      if (r != 0) throw domain_error("the missing-mass interval targets r = 0");
      return interval_missing_mass(d, n, t, opts);
    case IntervalMethod::envelope_upper:
      if (r != 0) throw domain_error("the envelope upper interval targets r = 0");
      return interval_envelope_upper(d, n, t, opts);
    case IntervalMethod::power_law_two_sided:
      if (r != 0) throw domain_error("the power-law interval targets r = 0");
      return interval_power_law(d, n, t, opts);
    case IntervalMethod::counts_bernstein:
      return interval_counts_bernstein(d, n, r, t, opts);
  }
  throw domain_error("unknown interval method");
}

}  // namespace occu
