#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "occu/bounds.hpp"
#include "occu/distribution.hpp"
#include "occu/errors.hpp"
#include "occu/estimate.hpp"
#include "occu/exact.hpp"
#include "occu/metric.hpp"
#include "occu/poisson.hpp"
#include "occu/report.hpp"
#include "occu/simulate.hpp"

namespace {

using nlohmann::json;
using namespace occu;

constexpr int kExitOk = 0;
constexpr int kExitVerdict = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

struct Options {
  std::string config_path;
  std::string out_dir;
  std::string format = "csv";
  std::uint64_t seed = 1;
  bool seed_set = false;
  int jobs = 0;
};

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& where) {
  if (!j.is_object()) throw config_error(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw config_error("unknown key in " + where + ": " + key);
  }
}

json load_config(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw config_error(std::string("config parse error: ") + e.what());
  }
}

std::vector<std::uint64_t> u64_list(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty()) throw config_error(name + " must be a non-empty array");
  std::vector<std::uint64_t> out;
  for (const auto& v : j) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      throw config_error(name + " entries must be non-negative integers");
    out.push_back(v.get<std::uint64_t>());
  }
  return out;
}

void require_r_reachable(const std::vector<std::uint64_t>& ns,
                         const std::vector<std::uint64_t>& rs) {
  const std::uint64_t n_max = *std::max_element(ns.begin(), ns.end());
  for (const std::uint64_t r : rs)
    if (r > n_max)
      throw config_error("r=" + std::to_string(r) + " exceeds every n (max " +
                         std::to_string(n_max) + ")");
}

std::vector<Distribution> parse_distributions(const json& cfg) {
  std::vector<Distribution> out;
  if (cfg.contains("distribution")) out.push_back(Distribution::from_json(cfg.at("distribution")));
  if (cfg.contains("distributions"))
    for (const auto& dj : cfg.at("distributions")) out.push_back(Distribution::from_json(dj));
  if (out.empty()) throw config_error("config needs distribution or distributions");
  return out;
}

// stdout when no --out, otherwise <out>/<name>.<ext>
void emit(const Options& opt, const std::string& name, const std::string& ext,
          const std::string& content) {
  if (opt.out_dir.empty()) {
    std::cout << content;
    return;
  }
  std::error_code ec;
  std::filesystem::create_directories(opt.out_dir, ec);
  if (ec) throw io_error("cannot create output directory: " + opt.out_dir);
  write_text_file(opt.out_dir + "/" + name + "." + ext, content);
}

void emit_table(const Options& opt, const std::string& name, const std::string& csv,
                const json& mirror) {
  if (opt.format == "json")
    emit(opt, name, "json", mirror.dump(2) + "\n");
  else
    emit(opt, name, "csv", csv);
}

int run_exact(const Options& opt) {
  const json cfg = load_config(opt.config_path);
  check_keys(cfg, {"distribution", "distributions", "n", "r"}, "exact config");
  const auto dists = parse_distributions(cfg);
  const auto ns = u64_list(cfg.at("n"), "n");
  const auto rs = u64_list(cfg.at("r"), "r");
  require_r_reachable(ns, rs);

  std::ostringstream csv;
  csv << "dist,family_params,n,r,exact_EM,exact_EM_lo,exact_EM_hi,exact_EK,atoms_used\n";
  json rows = json::array();
  for (const auto& d : dists) {
    const std::string params = family_params(d.to_json());
    for (const std::uint64_t n : ns)
      for (const std::uint64_t r : rs) {
        if (r > n) continue;
        const auto em = exact_EM(d, n, r);
        const auto ek = exact_EK(d, n, r);
        csv << d.label() << ',' << params << ',' << n << ',' << r << ',' << sig12(em.value)
            << ',' << sig12(em.lo) << ',' << sig12(em.hi) << ',' << sig12(ek.value) << ','
            << em.atoms_used << '\n';
        rows.push_back({{"dist", d.label()},
                        {"family_params", params},
                        {"n", n},
                        {"r", r},
                        {"exact_EM", em.value},
                        {"exact_EM_lo", em.lo},
                        {"exact_EM_hi", em.hi},
                        {"exact_EK", ek.value},
                        {"atoms_used", em.atoms_used}});
      }
  }
  emit_table(opt, "exact", csv.str(), json{{"rows", rows}});
  return kExitOk;
}

int run_bounds(const Options& opt) {
  const json cfg = load_config(opt.config_path);
  check_keys(cfg, {"distribution", "distributions", "n", "r", "slack", "b", "coarse_c", "beta"},
             "bounds config");
  const auto dists = parse_distributions(cfg);
  const auto ns = u64_list(cfg.at("n"), "n");
  const auto rs = u64_list(cfg.at("r"), "r");
  require_r_reachable(ns, rs);
  SuiteOptions sopts;
  if (cfg.contains("slack")) sopts.slack = cfg.at("slack").get<double>();
  if (cfg.contains("b")) sopts.b = cfg.at("b").get<double>();
  if (cfg.contains("coarse_c")) sopts.coarse_c = cfg.at("coarse_c").get<double>();
  if (cfg.contains("beta")) sopts.beta = cfg.at("beta").get<double>();

  const BatteryReport report = bounds_battery(dists, ns, rs, sopts);
  emit_table(opt, "bounds", report.to_csv(), report.to_json());
  return report.all_pass() ? kExitOk : kExitVerdict;
}

IntervalMethod parse_method(const std::string& name) {
  if (name == "missing_mass") return IntervalMethod::missing_mass;
  if (name == "envelope_upper") return IntervalMethod::envelope_upper;
  if (name == "power_law_two_sided") return IntervalMethod::power_law_two_sided;
  if (name == "counts_bernstein") return IntervalMethod::counts_bernstein;
  throw config_error("unknown interval method: " + name);
}

int run_simulate(const Options& opt) {
  const json cfg = load_config(opt.config_path);
  check_keys(cfg, {"distribution", "n", "r", "replicates", "master_seed", "coverage"},
             "simulate config");
  const auto d = Distribution::from_json(cfg.at("distribution"));
  const std::uint64_t n = cfg.at("n").get<std::uint64_t>();
  const std::uint64_t N = cfg.at("replicates").get<std::uint64_t>();
  SeedSpec seed{opt.seed_set ? opt.seed
                             : (cfg.contains("master_seed")
                                    ? cfg.at("master_seed").get<std::uint64_t>()
                                    : std::uint64_t{1})};

  if (cfg.contains("coverage")) {
    const json& cov = cfg.at("coverage");
    check_keys(cov, {"method", "t", "r"}, "coverage config");
    const auto method = parse_method(cov.at("method").get<std::string>());
    const double t = cov.at("t").get<double>();
    const std::uint64_t r = cov.contains("r") ? cov.at("r").get<std::uint64_t>() : 0;
    if (r > n) throw config_error("coverage r exceeds n");
    const auto res = coverage_experiment(d, n, t, N, seed, method, r);
    const double floor = res.interval->confidence_floor;
    const double slack =
        3.0 * std::sqrt(std::max(0.0, floor * (1.0 - floor)) / static_cast<double>(N));
    const bool pass = *res.coverage_fraction >= floor - slack;
    json mirror = res.to_json();
    mirror["coverage_target"] = floor - slack;
    mirror["verdict"] = pass ? "pass" : "fail";
    std::ostringstream csv;
    csv << res.to_csv();
    csv << "# coverage," << sig12(*res.coverage_fraction) << ",floor,"
        << sig12(floor) << ",target," << sig12(floor - slack) << ",verdict,"
        << (pass ? "pass" : "fail") << '\n';
    emit_table(opt, "simulate", csv.str(), mirror);
    return pass ? kExitOk : kExitVerdict;
  }

  const auto rs = u64_list(cfg.at("r"), "r");
  require_r_reachable({n}, rs);
  const auto res = monte_carlo(d, n, rs, N, seed);
  emit_table(opt, "simulate", res.to_csv(), res.to_json());
  return kExitOk;
}

int run_estimate(const Options& opt) {
  const json cfg = load_config(opt.config_path);
  check_keys(cfg,
             {"distribution", "histogram", "histogram_path", "histogram_csv", "estimators",
              "intervals", "n"},
             "estimate config");
  std::optional<Distribution> dist;
  if (cfg.contains("distribution")) dist = Distribution::from_json(cfg.at("distribution"));

  std::map<std::string, std::uint64_t> hist;
  if (cfg.contains("histogram")) {
    for (const auto& [key, value] : cfg.at("histogram").items())
      hist[key] = value.get<std::uint64_t>();
  } else if (cfg.contains("histogram_path")) {
    hist = read_token_histogram(cfg.at("histogram_path").get<std::string>());
  } else if (cfg.contains("histogram_csv")) {
    const json& hc = cfg.at("histogram_csv");
    check_keys(hc, {"path", "column"}, "histogram_csv");
    hist = read_csv_histogram(hc.at("path").get<std::string>(),
                              hc.at("column").get<std::string>());
  } else {
    throw config_error("estimate config needs histogram, histogram_path, or histogram_csv");
  }
  const SampleSummary summary = SampleSummary::from_histogram(hist);

  std::ostringstream csv;
  csv << "kind,param,t,value,lower,upper,confidence_floor,applicable\n";
  json out;
  out["n"] = summary.n;
  out["estimates"] = json::array();
  out["intervals"] = json::array();
  if (cfg.contains("estimators")) {
    for (const auto& ej : cfg.at("estimators")) {
      check_keys(ej, {"kind", "r", "s"}, "estimator");
      const std::string kind = ej.at("kind").get<std::string>();
      double value = 0.0;
      std::uint64_t param = 0;
      if (kind == "turing") {
        param = ej.contains("r") ? ej.at("r").get<std::uint64_t>() : 0;
        value = turing(summary, param);
      } else if (kind == "modified") {
        param = ej.at("s").get<std::uint64_t>();
        value = turing_modified(summary, param);
      } else {
        throw config_error("unknown estimator kind: " + kind);
      }
      json e = {{"kind", kind}, {"param", param}, {"value", value}};
      if (dist) {
        const auto spec = kind == "turing" ? EstimatorSpec::turing_spec()
                                           : EstimatorSpec::modified_spec(param);
        const std::uint64_t br = kind == "turing" ? param : 0;
        e["bias_exact"] = bias_exact(*dist, summary.n, br, spec);
      }
      out["estimates"].push_back(e);
      csv << kind << ',' << param << ",," << sig12(value) << ",,,,\n";
    }
  }
  if (cfg.contains("intervals")) {
    if (!dist) throw config_error("intervals need a distribution");
    for (const auto& ij : cfg.at("intervals")) {
      check_keys(ij, {"method", "t", "r"}, "interval");
      const auto method = parse_method(ij.at("method").get<std::string>());
      const double t = ij.at("t").get<double>();
      const std::uint64_t r = ij.contains("r") ? ij.at("r").get<std::uint64_t>() : 0;
      const auto pi = concentration_interval(method, *dist, summary.n, r, t);
      out["intervals"].push_back(pi.to_json());
      csv << pi.source << ',' << r << ',' << sig12(t) << ",," << sig12(pi.lower) << ','
          << sig12(pi.upper) << ',' << sig12(pi.confidence_floor) << ','
          << (pi.applicable ? "true" : "false") << '\n';
    }
  }
  emit_table(opt, "estimate", csv.str(), out);
  return kExitOk;
}

int run_poisson(const Options& opt) {
  const json cfg = load_config(opt.config_path);
  check_keys(cfg, {"distribution", "distributions", "Lambda", "intensity", "t", "r", "variants"},
             "poisson config");
  const auto dists = parse_distributions(cfg);
  const auto rs = u64_list(cfg.at("r"), "r");
  std::vector<double> lambdas;
  if (cfg.contains("Lambda")) {
    for (const auto& v : cfg.at("Lambda")) lambdas.push_back(v.get<double>());
  } else if (cfg.contains("intensity")) {
    const auto intensity = IntensityFn::from_json(cfg.at("intensity"));
    if (!cfg.contains("t")) throw config_error("intensity form needs t");
    for (const auto& v : cfg.at("t")) lambdas.push_back(intensity.cumulative(v.get<double>()));
  } else {
    throw config_error("poisson config needs Lambda or intensity");
  }
  std::vector<PoissonBoundVariant> variants = {PoissonBoundVariant::adaptive_split,
                                               PoissonBoundVariant::envelope};
  if (cfg.contains("variants")) {
    variants.clear();
    for (const auto& v : cfg.at("variants")) {
      const std::string name = v.get<std::string>();
      if (name == "adaptive_split")
        variants.push_back(PoissonBoundVariant::adaptive_split);
      else if (name == "envelope")
        variants.push_back(PoissonBoundVariant::envelope);
      else
        throw config_error("unknown poisson variant: " + name);
    }
  }

  bool all_pass = true;
  std::ostringstream csv;
  csv << "dist,family_params,Lambda,r,exact,bound_source,bound_value,optimizer_eps,applicable,"
         "verdict\n";
  json rows = json::array();
  for (const auto& d : dists) {
    const std::string params = family_params(d.to_json());
    for (const double L : lambdas)
      for (const std::uint64_t r : rs) {
        const auto ex = exact_EM_poisson(d, L, r);
        for (const auto variant : variants) {
          const auto b = upper_poisson(d, L, r, variant);
          std::string verdict = "n/a";
          if (b.applicable) {
            const bool ok = b.value >= ex.lo - 1e-10;
            verdict = ok ? "pass" : "fail";
            if (!ok) all_pass = false;
          }
          csv << d.label() << ',' << params << ',' << sig12(L) << ',' << r << ','
              << sig12(ex.value) << ',' << b.source << ',' << sig12(b.value) << ','
              << (b.optimizer_eps ? sig12(*b.optimizer_eps) : "") << ','
              << (b.applicable ? "true" : "false") << ',' << verdict << '\n';
          json row = b.to_json();
          row["dist"] = d.label();
          row["family_params"] = params;
          row["Lambda"] = L;
          row["r"] = r;
          row["exact"] = ex.value;
          row["verdict"] = verdict;
          rows.push_back(row);
        }
      }
  }
  emit_table(opt, "poisson", csv.str(), json{{"rows", rows}});
  return all_pass ? kExitOk : kExitVerdict;
}

int run_metric(const Options& opt) {
  const json cfg = load_config(opt.config_path);
  check_keys(cfg, {"model", "delta", "n", "r", "Lambda", "candidates", "nu_eps"},
             "metric config");
  const auto model = MetricModel::from_json(cfg.at("model"));
  const double delta = cfg.at("delta").get<double>();
  const std::uint64_t n = cfg.at("n").get<std::uint64_t>();
  const auto rs = u64_list(cfg.at("r"), "r");
  std::optional<double> Lambda;
  if (cfg.contains("Lambda")) Lambda = cfg.at("Lambda").get<double>();
  if (!Lambda) require_r_reachable({n}, rs);
  std::vector<CoverCandidate> candidates;
  if (cfg.contains("candidates"))
    for (const auto& cj : cfg.at("candidates")) {
      check_keys(cj, {"x", "t", "rho"}, "cover candidate");
      candidates.push_back({cj.at("x").get<double>(), cj.at("t").get<double>(),
                            cj.at("rho").get<double>()});
    }

  bool all_pass = true;
  std::ostringstream csv;
  csv << "model,quantity,delta,n,r,eps,value,verdict\n";
  json rows = json::array();
  const std::string label = model.label();
  double exact0 = -1.0;
  for (const std::uint64_t r : rs) {
    const double v = exact_EM_delta(model, n, delta, r, Lambda);
    if (r == 0) exact0 = v;
    csv << label << ",exact_EM_delta," << sig12(delta) << ',' << n << ',' << r << ",,"
        << sig12(v) << ",\n";
    rows.push_back({{"model", label},
                    {"quantity", "exact_EM_delta"},
                    {"delta", delta},
                    {"n", n},
                    {"r", r},
                    {"value", v}});
  }
  if (!Lambda) {
    const auto b = cover_upper(model, n, delta, candidates);
    if (exact0 < 0.0) exact0 = exact_EM_delta(model, n, delta, 0);
    const bool ok = !b.applicable || b.value >= exact0 - 1e-10;
    if (!ok) all_pass = false;
    csv << label << ",cover_upper," << sig12(delta) << ',' << n << ",0,," << sig12(b.value)
        << ',' << (ok ? "pass" : "fail") << '\n';
    json row = b.to_json();
    row["model"] = label;
    row["quantity"] = "cover_upper";
    row["verdict"] = ok ? "pass" : "fail";
    rows.push_back(row);
  }
  if (cfg.contains("nu_eps"))
    for (const auto& ev : cfg.at("nu_eps")) {
      const double eps = ev.get<double>();
      const double v = nu_delta(model, delta, eps);
      csv << label << ",nu_delta," << sig12(delta) << ",,," << sig12(eps) << ','
          << sig12(v) << ",\n";
      rows.push_back({{"model", label},
                      {"quantity", "nu_delta"},
                      {"delta", delta},
                      {"eps", eps},
                      {"value", v}});
    }
  emit_table(opt, "metric", csv.str(), json{{"rows", rows}});
  return all_pass ? kExitOk : kExitVerdict;
}

int run_suite(const Options& opt) {
  if (opt.out_dir.empty()) throw config_error("suite needs --out");
  json summary;
  bool all_pass = true;

  {  // bounds battery across the distribution catalog
    std::vector<Distribution> dists = {
        Distribution::uniform(2),      Distribution::uniform(10),
        Distribution::uniform(100),    Distribution::zipf(0.3),
        Distribution::zipf(0.5),       Distribution::zipf(0.7),
        Distribution::geometric(0.5),  Distribution::geometric(0.9),
        Distribution::dirac()};
    const auto report = bounds_battery(dists, {2, 10, 100, 1000}, {0, 1, 2, 5});
    emit_table(opt, "bounds", report.to_csv(), report.to_json());
    summary["bounds_sandwich"] = report.all_pass() ? "pass" : "fail";
    all_pass = all_pass && report.all_pass();
  }

  {  // Monte Carlo coverage of the power-law two-sided interval
    const auto z5 = Distribution::zipf(0.5);
    const auto res = coverage_experiment(z5, 10000, 3.0, 400, SeedSpec{opt.seed},
                                         IntervalMethod::power_law_two_sided, 0);
    const double floor = res.interval->confidence_floor;
    const double slack = 3.0 * std::sqrt(floor * (1.0 - floor) / 400.0);
    const bool pass = *res.coverage_fraction >= floor - slack;
    json mirror = res.to_json();
    mirror["verdict"] = pass ? "pass" : "fail";
    emit_table(opt, "simulate", res.to_csv(), mirror);
    summary["coverage"] = pass ? "pass" : "fail";
    summary["coverage_fraction"] = *res.coverage_fraction;
    all_pass = all_pass && pass;
  }

  {  // Poissonized sandwich block
    bool pass = true;
    std::ostringstream csv;
    csv << "dist,Lambda,r,exact,adaptive_split,envelope\n";
    for (const auto& d : {Distribution::uniform(10), Distribution::zipf(0.5),
                          Distribution::geometric(0.5)}) {
      for (const double L : {10.0, 100.0})
        for (const std::uint64_t r : {std::uint64_t{0}, std::uint64_t{1}}) {
          const auto ex = exact_EM_poisson(d, L, r);
          const auto split = upper_poisson(d, L, r, PoissonBoundVariant::adaptive_split);
          const auto env = upper_poisson(d, L, r, PoissonBoundVariant::envelope);
          pass = pass && split.value >= ex.lo - 1e-10 &&
                 (!env.applicable || env.value >= ex.lo - 1e-10);
          csv << d.label() << ',' << sig12(L) << ',' << r << ',' << sig12(ex.value) << ','
              << sig12(split.value) << ',' << (env.applicable ? sig12(env.value) : "") << '\n';
        }
    }
    emit(opt, "poisson", "csv", csv.str());
    summary["poisson_sandwich"] = pass ? "pass" : "fail";
    all_pass = all_pass && pass;
  }

  {  // metric block
    const auto uni = MetricModel::segment_uniform(0.0, 1.0);
    const auto atoms = MetricModel::point_set({0.0, 1.0, 2.0}, {0.5, 0.3, 0.2});
    bool pass = std::fabs(exact_EM_delta(uni, 1, 0.5, 0) - 0.25) <= 1e-10;
    for (const auto* m : {&uni, &atoms})
      for (const std::uint64_t n : {std::uint64_t{10}, std::uint64_t{100}}) {
        const auto b = cover_upper(*m, n, 0.1);
        pass = pass && b.value >= exact_EM_delta(*m, n, 0.1, 0) - 1e-10;
      }
    summary["metric"] = pass ? "pass" : "fail";
    all_pass = all_pass && pass;
  }

  summary["all_pass"] = all_pass;
  emit(opt, "summary", "json", summary.dump(2) + "\n");
  return all_pass ? kExitOk : kExitVerdict;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"occupancy expectations, finite-sample bounds, and experiments"};
  app.require_subcommand(1);

  Options opt;
  const auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", opt.config_path, "JSON config path");
    if (needs_config) c->required();
    sub->add_option("--out", opt.out_dir, "output directory (default: stdout)");
    sub->add_option("--format", opt.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", opt.seed, "master seed override")
        ->each([&](const std::string&) { opt.seed_set = true; });
    sub->add_option("--jobs", opt.jobs, "worker thread count");
  };

  auto* c_exact = app.add_subcommand("exact", "exact occupancy expectations");
  auto* c_bounds = app.add_subcommand("bounds", "bound battery with sandwich verdicts");
  auto* c_sim = app.add_subcommand("simulate", "Monte Carlo and coverage experiments");
  auto* c_est = app.add_subcommand("estimate", "estimators and concentration intervals");
  auto* c_poi = app.add_subcommand("poisson", "Poissonized expectations and bounds");
  auto* c_met = app.add_subcommand("metric", "neighborhood occupancy on metric models");
  auto* c_suite = app.add_subcommand("suite", "end-to-end battery with report files");
  for (auto* sub : {c_exact, c_bounds, c_sim, c_est, c_poi, c_met}) add_common(sub, true);
  add_common(c_suite, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

#ifdef _OPENMP
  if (opt.jobs > 0) omp_set_num_threads(opt.jobs);
#endif

  try {
    if (app.got_subcommand(c_exact)) return run_exact(opt);
    if (app.got_subcommand(c_bounds)) return run_bounds(opt);
    if (app.got_subcommand(c_sim)) return run_simulate(opt);
    if (app.got_subcommand(c_est)) return run_estimate(opt);
    if (app.got_subcommand(c_poi)) return run_poisson(opt);
    if (app.got_subcommand(c_met)) return run_metric(opt);
    if (app.got_subcommand(c_suite)) return run_suite(opt);
  } catch (const io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const precision_error& e) {
    std::cerr << "certification failure: " << e.what() << "\n";
    return kExitVerdict;
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const domain_error& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
