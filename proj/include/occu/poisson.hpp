#pragma once

#include <cstdint>

#include <json.hpp>

#include "occu/bounds.hpp"
#include "occu/distribution.hpp"
#include "occu/exact.hpp"
#include "occu/simulate.hpp"

namespace occu {

/** Observation-arrival intensity with a closed-form cumulative
 *  Lambda_t = int_0^t lambda(u) du: constant lambda (Lambda_t = lambda t) or
 *  a u^b with b > -1 (Lambda_t = a t^{1+b}/(1+b)). */
struct IntensityFn {
  enum class Form { constant, power };
  Form form = Form::constant;
  double lambda = 1.0;  // constant
  double a = 1.0;       // power
  double b = 0.0;       // power, > -1

  double cumulative(double t) const;

  static IntensityFn constant(double lambda);
  static IntensityFn power(double a, double b);
  static IntensityFn from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/** E M_r(t) = (Lambda^r / r!) sum_a p_a^{1+r} e^{-Lambda p_a} when the number
 *  of observations by time t is Poisson(Lambda). Truncation certified. */
ExactResult exact_EM_poisson(const Distribution& d, double Lambda, std::uint64_t r,
                             const ExactOptions& opts = {});

enum class PoissonBoundVariant { adaptive_split, envelope };

/** Upper bounds on E M_r(t). adaptive_split minimizes
 *    cbar(r) nu(eps)/Lambda + (2^{1+r} Lambda^r / r!) sum_a J(min(eps, 2 p_a)),
 *  J(y) = int_0^y u^r e^{-Lambda u/2} du, over the breakpoint candidates;
 *  envelope needs an upper counting envelope and Lambda >= 1. */
BoundResult upper_poisson(const Distribution& d, double Lambda, std::uint64_t r,
                          PoissonBoundVariant variant);

/** Poisson(mu) draw from the splitmix stream seeded with stream_seed
 *  (inversion for mu <= 30, transformed rejection above). */
std::uint64_t poisson_draw(double mu, std::uint64_t stream_seed);

/** n_t ~ Poisson(Lambda_t), then an n_t-sample of d; deterministic per
 *  (seed, replicate). n_t = 0 yields the empty summary with M_0 = 1. */
SampleSummary sample_poissonized(const Distribution& d, const IntensityFn& intensity, double t,
                                 const SeedSpec& seed, std::uint64_t replicate);

}  // namespace occu
