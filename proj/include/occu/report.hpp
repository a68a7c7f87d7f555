#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "occu/bounds.hpp"
#include "occu/distribution.hpp"

namespace occu {

/** A bounds battery: one BoundReport per (distribution, n, r) grid point with
 *  r <= n, evaluated concurrently but assembled in grid order. */
struct BatteryReport {
  std::vector<BoundReport> points;
  double slack = 1e-10;

  bool all_pass() const;
  /** Flat rows, one per evaluated bound:
   *  dist,family_params,n,r,exact,bound_source,bound_value,optimizer_eps,
   *  applicable,verdict. Numbers carry 12 significant digits. */
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

BatteryReport bounds_battery(const std::vector<Distribution>& dists,
                             const std::vector<std::uint64_t>& ns,
                             const std::vector<std::uint64_t>& rs,
                             const SuiteOptions& opts = {});

/** "alpha=0.5", "m=10", ... extracted from a distribution config. */
std::string family_params(const nlohmann::json& dist_config);

/** %.12g, with inf/nan spelled out. */
std::string sig12(double v);

/** Whole-file write; failures raise io_error. */
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace occu
