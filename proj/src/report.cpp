#include "occu/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "occu/errors.hpp"

namespace occu {

std::string sig12(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string family_params(const nlohmann::json& dist_config) {
  std::string out;
  for (const auto& [key, value] : dist_config.items()) {
    if (key == "family" || key == "truncation_tol") continue;
    if (!out.empty()) out += ";";
    if (key == "masses")
      out += "atoms=" + std::to_string(value.size());
    else
      out += key + "=" + (value.is_number() ? sig12(value.get<double>()) : value.dump());
  }
  return out;
}

bool BatteryReport::all_pass() const {
  for (const auto& p : points)
    if (!p.sandwich_ok) return false;
  return true;
}

namespace {

std::string row_verdict(const BoundResult& b, const ExactResult& exact, double slack) {
  if (!b.applicable) return "n/a";
  if (!b.certified) return "uncertified";
  const bool ok = b.is_upper ? b.value >= exact.lo - slack : b.value <= exact.hi + slack;
  return ok ? "pass" : "fail";
}

}  // namespace

std::string BatteryReport::to_csv() const {
  std::ostringstream out;
  out << "dist,family_params,n,r,exact,bound_source,bound_value,optimizer_eps,applicable,"
         "verdict\n";
  for (const auto& p : points) {
    const std::string params = family_params(p.dist_config);
    for (const auto& b : p.results) {
      out << p.dist_label << ',' << params << ',' << p.n << ',' << p.r << ','
          << sig12(p.exact.value) << ',' << b.source << ',' << sig12(b.value) << ','
          << (b.optimizer_eps ? sig12(*b.optimizer_eps) : "") << ','
          << (b.applicable ? "true" : "false") << ',' << row_verdict(b, p.exact, slack)
          << '\n';
    }
  }
  return out.str();
}

nlohmann::json BatteryReport::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : points) pts.push_back(p.to_json());
  return {{"slack", slack}, {"all_pass", all_pass()}, {"points", pts}};
}

BatteryReport bounds_battery(const std::vector<Distribution>& dists,
                             const std::vector<std::uint64_t>& ns,
                             const std::vector<std::uint64_t>& rs,
                             const SuiteOptions& opts) {
  struct Point {
    std::size_t d;
    std::uint64_t n, r;
  };
  std::vector<Point> grid;
  for (std::size_t d = 0; d < dists.size(); ++d)
    for (const std::uint64_t n : ns)
      for (const std::uint64_t r : rs)
        if (r <= n) grid.push_back({d, n, r});

  BatteryReport report;
  report.slack = opts.slack;
  report.points.resize(grid.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(grid.size()); ++i) {
    try {
      const auto& g = grid[static_cast<std::size_t>(i)];
      report.points[static_cast<std::size_t>(i)] =
          bound_suite(dists[g.d], g.n, g.r, opts);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return report;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw io_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw io_error("read failed: " + path);
  return ss.str();
}

}  // namespace occu
