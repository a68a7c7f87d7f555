#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "occu/bounds.hpp"
#include "occu/simulate.hpp"

namespace occu {

/** A law on a one-dimensional metric space: either a density on a segment
 *  [a, b] (uniform or piecewise constant) under the absolute-value metric, or
 *  a finite set of weighted points, optionally with an explicit distance
 *  matrix. Ball masses are closed form in both cases; balls are open. */
class MetricModel {
 public:
  enum class Space { segment, points };
  enum class SegmentLaw { uniform, piecewise_constant };

  static MetricModel segment_uniform(double a, double b);
  /** breaks strictly increasing; values[i] is the density on
   *  [breaks[i], breaks[i+1]); total mass must be 1 within 1e-12. */
  static MetricModel segment_piecewise(std::vector<double> breaks, std::vector<double> values);
  /** Point set under |x - y|; masses must sum to 1 within 1e-12. */
  static MetricModel point_set(std::vector<double> coords, std::vector<double> masses);
  /** Point set with an explicit symmetric distance matrix; probe positions
   *  are then restricted to the points themselves. */
  static MetricModel point_set(std::vector<double> coords, std::vector<double> masses,
                               std::vector<std::vector<double>> metric);

  static MetricModel from_json(const nlohmann::json& config);
  nlohmann::json to_json() const;
  std::string label() const;

  Space space() const { return space_; }
  bool has_explicit_metric() const { return explicit_metric_; }
  double segment_left() const;
  double segment_right() const;
  std::size_t point_count() const { return coords_.size(); }
  double point_coord(std::size_t i) const { return coords_[i]; }
  double point_mass(std::size_t i) const { return masses_[i]; }
  double distance(std::size_t i, std::size_t j) const;

  /** Mass of the open ball of radius delta around x. For explicit-metric
   *  point sets, x must coincide with a point coordinate. */
  double ball_mass(double x, double delta) const;
  /** Largest ball mass over the space (exact: kink scan for segments, atom
   *  scan for point sets). */
  double sup_ball_mass(double delta) const;
  double diameter() const;

  /** Inverse-CDF draw from the law, u in [0, 1). */
  double draw_unit(double u) const;

  /** Positions where x -> ball_mass(x, delta) can kink, clipped to the
   *  segment; empty for point sets. */
  std::vector<double> kink_points(double delta) const;
  double density_at(double x) const;

 private:
  MetricModel() = default;

  Space space_ = Space::segment;
  SegmentLaw law_ = SegmentLaw::uniform;
  std::vector<double> breaks_;  // size m + 1
  std::vector<double> dens_;    // size m
  std::vector<double> cum_;     // mass of [a, breaks_[i]]

  std::vector<double> coords_;
  std::vector<double> masses_;
  bool explicit_metric_ = false;
  std::vector<std::vector<double>> dist_;
  std::vector<double> sorted_x_;    // line-metric point sets
  std::vector<double> sorted_m_;    // masses in sorted_x_ order
  std::vector<double> sorted_cum_;  // prefix masses over sorted_x_
};

/** Number of sample points at strict distance < delta from x. */
std::uint64_t xi_delta(const std::vector<double>& points, double x, double delta);

/** E of the probability that a fresh draw has exactly r of n sample points in
 *  its delta-ball: integral of the binomial kernel in ball_mass against the
 *  law (Poisson kernel with mean Lambda * ball_mass when poissonized_Lambda
 *  is set, in which case n is ignored). Atom laws sum exactly; densities use
 *  adaptive quadrature split at the ball-mass kinks, abs tol 1e-10. */
double exact_EM_delta(const MetricModel& model, std::uint64_t n, double delta, std::uint64_t r,
                      std::optional<double> poissonized_Lambda = std::nullopt);

/** Ball-mass counting function: integral of 1/ball_mass over the region where
 *  ball_mass(x, delta) >= eps. Exact region endpoints (ball mass is piecewise
 *  linear on segments); quadrature tol 1e-9. */
double nu_delta(const MetricModel& model, double delta, double eps);

/** Integral of f(ball_mass(x)) / ball_mass(x) against the law; f(u) = u
 *  integrates to exactly 1, and indicators recover nu_delta. */
double nu_delta_integral(const MetricModel& model, double delta,
                         const std::function<double(double)>& f);

struct CoverCandidate {
  double x;    // ball center
  double t;    // ball radius whose complement is left uncovered
  double rho;  // covering radius, must be <= delta / 2
};

/** Upper bound on E M_{n,0} in the delta-neighborhood sense: minimum over
 *  candidates of (1 - ball_mass(x, t)) + N(t, rho) / (n e), where N is a
 *  rho-cover count of the t-ball around x (interval count on segments,
 *  greedy or exact small-set cover on point sets). Candidates with
 *  rho > delta / 2 are rejected and recorded. A default candidate grid is
 *  always swept in addition to the supplied list. */
BoundResult cover_upper(const MetricModel& model, std::uint64_t n, double delta,
                        const std::vector<CoverCandidate>& candidates = {});

/** Probability that a fresh draw has exactly r of the sample points in its
 *  delta-ball, given the sample: exact finite sum for atom laws, probe
 *  average (replicate-seeded draws) for densities. */
double M_delta_empirical(const MetricModel& model, const std::vector<double>& sample,
                         double delta, std::uint64_t r, std::uint64_t probes,
                         const SeedSpec& seed);

}  // namespace occu
