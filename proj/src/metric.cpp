#include "occu/metric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "occu/errors.hpp"
#include "occu/numerics.hpp"

namespace occu {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double unit_from_seed(std::uint64_t seed) {
  return static_cast<double>(mix64(seed + 0x9E3779B97F4A7C15ull) >> 11) * 0x1.0p-53;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

double binom_kernel(double p, std::uint64_t n, std::uint64_t r) {
  if (p <= 0.0) return r == 0 ? 1.0 : 0.0;
  if (p >= 1.0) return r == n ? 1.0 : 0.0;
  const double rr = static_cast<double>(r);
  const double nr = static_cast<double>(n - r);
  return std::exp(num::log_binom(n, r) + rr * std::log(p) + nr * std::log1p(-p));
}

double poisson_kernel(double p, double Lambda, std::uint64_t r) {
  if (p <= 0.0) return r == 0 ? 1.0 : 0.0;
  const double rr = static_cast<double>(r);
  return std::exp(rr * std::log(Lambda * p) - Lambda * p - std::lgamma(rr + 1.0));
}

}  // namespace

MetricModel MetricModel::segment_uniform(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b) || !(a < b))
    throw config_error("segment needs finite a < b");
  MetricModel m;
  m.space_ = Space::segment;
  m.law_ = SegmentLaw::uniform;
  m.breaks_ = {a, b};
  m.dens_ = {1.0 / (b - a)};
  m.cum_ = {0.0, 1.0};
  return m;
}

MetricModel MetricModel::segment_piecewise(std::vector<double> breaks,
                                           std::vector<double> values) {
  if (breaks.size() < 2 || values.size() + 1 != breaks.size())
    throw config_error("piecewise law needs k+1 breaks for k density values");
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!std::isfinite(breaks[i]) || !(breaks[i] < breaks[i + 1]))
      throw config_error("piecewise breaks must be finite and strictly increasing");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0) || !std::isfinite(values[i]))
      throw config_error("piecewise densities must be >= 0");
    total += values[i] * (breaks[i + 1] - breaks[i]);
  }
  if (std::fabs(total - 1.0) > 1e-12)
    throw config_error("piecewise law mass is " + fmt(total) + ", expected 1");
  MetricModel m;
  m.space_ = Space::segment;
  m.law_ = SegmentLaw::piecewise_constant;
  m.breaks_ = std::move(breaks);
  m.dens_ = std::move(values);
  m.cum_.assign(m.breaks_.size(), 0.0);
  for (std::size_t i = 0; i < m.dens_.size(); ++i)
    m.cum_[i + 1] = m.cum_[i] + m.dens_[i] * (m.breaks_[i + 1] - m.breaks_[i]);
  m.cum_.back() = 1.0;
  return m;
}

MetricModel MetricModel::point_set(std::vector<double> coords, std::vector<double> masses) {
  if (coords.empty() || coords.size() != masses.size())
    throw config_error("point set needs matching non-empty coords and masses");
  double total = 0.0;
  for (double w : masses) {
    if (!(w > 0.0) || !std::isfinite(w)) throw config_error("point masses must be > 0");
    total += w;
  }
  if (std::fabs(total - 1.0) > 1e-12)
    throw config_error("point masses sum to " + fmt(total) + ", expected 1");
  MetricModel m;
  m.space_ = Space::points;
  m.coords_ = std::move(coords);
  m.masses_ = std::move(masses);
  std::vector<std::size_t> order(m.coords_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return m.coords_[i] < m.coords_[j]; });
  m.sorted_x_.reserve(order.size());
  m.sorted_m_.reserve(order.size());
  m.sorted_cum_.assign(order.size() + 1, 0.0);
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k > 0 && !(m.coords_[order[k - 1]] < m.coords_[order[k]]))
      throw config_error("point coordinates must be distinct");
    m.sorted_x_.push_back(m.coords_[order[k]]);
    m.sorted_m_.push_back(m.masses_[order[k]]);
    m.sorted_cum_[k + 1] = m.sorted_cum_[k] + m.masses_[order[k]];
  }
  return m;
}

MetricModel MetricModel::point_set(std::vector<double> coords, std::vector<double> masses,
                                   std::vector<std::vector<double>> metric) {
  MetricModel m = point_set(std::move(coords), std::move(masses));
  const std::size_t s = m.coords_.size();
  if (metric.size() != s) throw config_error("metric matrix must be square over the points");
  for (std::size_t i = 0; i < s; ++i) {
    if (metric[i].size() != s) throw config_error("metric matrix must be square over the points");
    if (metric[i][i] != 0.0) throw config_error("metric matrix needs a zero diagonal");
    for (std::size_t j = 0; j < s; ++j) {
      if (!(metric[i][j] >= 0.0) || !std::isfinite(metric[i][j]))
        throw config_error("metric entries must be finite and >= 0");
      if (std::fabs(metric[i][j] - metric[j][i]) > 1e-12)
        throw config_error("metric matrix must be symmetric");
    }
  }
  m.explicit_metric_ = true;
  m.dist_ = std::move(metric);
  return m;
}

double MetricModel::segment_left() const {
  if (space_ != Space::segment) throw domain_error("not a segment model");
  return breaks_.front();
}

double MetricModel::segment_right() const {
  if (space_ != Space::segment) throw domain_error("not a segment model");
  return breaks_.back();
}

double MetricModel::distance(std::size_t i, std::size_t j) const {
  if (explicit_metric_) return dist_[i][j];
  return std::fabs(coords_[i] - coords_[j]);
}

double MetricModel::density_at(double x) const {
  if (space_ != Space::segment) throw domain_error("density only defined on segments");
  if (x < breaks_.front() || x > breaks_.back()) return 0.0;
  const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
  const std::size_t i =
      std::min(dens_.size() - 1, static_cast<std::size_t>(it - breaks_.begin()) - 1);
  return dens_[i];
}

namespace {

// mass of [left, t] under the piecewise-constant law
double segment_cdf(const std::vector<double>& breaks, const std::vector<double>& dens,
                   const std::vector<double>& cum, double t) {
  if (t <= breaks.front()) return 0.0;
  if (t >= breaks.back()) return 1.0;
  const auto it = std::upper_bound(breaks.begin(), breaks.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - breaks.begin()) - 1;
  return cum[i] + dens[i] * (t - breaks[i]);
}

}  // namespace

double MetricModel::ball_mass(double x, double delta) const {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw domain_error("ball_mass needs delta > 0");
  if (space_ == Space::segment) {
    const double lo = std::max(breaks_.front(), x - delta);
    const double hi = std::min(breaks_.back(), x + delta);
    if (!(hi > lo)) return 0.0;
    return segment_cdf(breaks_, dens_, cum_, hi) - segment_cdf(breaks_, dens_, cum_, lo);
  }
  if (explicit_metric_) {
    for (std::size_t i = 0; i < coords_.size(); ++i) {
      if (coords_[i] == x) {
        double s = 0.0;
        for (std::size_t j = 0; j < coords_.size(); ++j)
          if (dist_[i][j] < delta) s += masses_[j];
        return std::min(1.0, s);
      }
    }
    throw domain_error("explicit-metric ball centers must be point coordinates");
  }
  const auto lo = std::upper_bound(sorted_x_.begin(), sorted_x_.end(), x - delta);
  const auto hi = std::lower_bound(sorted_x_.begin(), sorted_x_.end(), x + delta);
  const std::size_t i0 = static_cast<std::size_t>(lo - sorted_x_.begin());
  const std::size_t i1 = static_cast<std::size_t>(hi - sorted_x_.begin());
  if (i1 <= i0) return 0.0;
  if (i1 - i0 <= 64) {  // direct sum: bit-exact when a ball isolates one atom
    double s = 0.0, comp = 0.0;
    for (std::size_t k = i0; k < i1; ++k) {
      const double y = sorted_m_[k] - comp;
      const double t = s + y;
      comp = (t - s) - y;
      s = t;
    }
    return std::min(1.0, s);
  }
  return std::min(1.0, sorted_cum_[i1] - sorted_cum_[i0]);
}

std::vector<double> MetricModel::kink_points(double delta) const {
  if (space_ != Space::segment) return {};
  std::vector<double> k;
  k.reserve(3 * breaks_.size());
  for (double b : breaks_) {
    k.push_back(b);
    k.push_back(b - delta);
    k.push_back(b + delta);
  }
  const double a = breaks_.front(), b = breaks_.back();
  std::vector<double> out;
  for (double t : k)
    if (t >= a && t <= b) out.push_back(t);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [](double u, double v) { return v - u < 1e-15; }),
            out.end());
  if (out.front() != a) out.insert(out.begin(), a);
  if (out.back() != b) out.push_back(b);
  return out;
}

double MetricModel::sup_ball_mass(double delta) const {
  if (space_ == Space::points) {
    double best = 0.0;
    for (std::size_t i = 0; i < coords_.size(); ++i)
      best = std::max(best, ball_mass(coords_[i], delta));
    return best;
  }
  // ball mass is piecewise linear in the center, so kinks carry the sup
  double best = 0.0;
  for (double x : kink_points(delta)) best = std::max(best, ball_mass(x, delta));
  return best;
}

double MetricModel::diameter() const {
  if (space_ == Space::segment) return breaks_.back() - breaks_.front();
  if (!explicit_metric_) return sorted_x_.back() - sorted_x_.front();
  double best = 0.0;
  for (std::size_t i = 0; i < coords_.size(); ++i)
    for (std::size_t j = i + 1; j < coords_.size(); ++j) best = std::max(best, dist_[i][j]);
  return best;
}

double MetricModel::draw_unit(double u) const {
  if (!(u >= 0.0) || !(u < 1.0)) throw domain_error("draw_unit needs u in [0, 1)");
  if (space_ == Space::segment) {
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
    const std::size_t i =
        std::min(dens_.size() - 1, static_cast<std::size_t>(it - cum_.begin()) - 1);
    if (dens_[i] == 0.0) return breaks_[i + 1];
    return std::min(breaks_.back(), breaks_[i] + (u - cum_[i]) / dens_[i]);
  }
  const auto it = std::upper_bound(sorted_cum_.begin() + 1, sorted_cum_.end(), u);
  const std::size_t i =
      std::min(sorted_x_.size() - 1, static_cast<std::size_t>(it - sorted_cum_.begin()) - 1);
  return sorted_x_[i];
}

MetricModel MetricModel::from_json(const nlohmann::json& config) {
  if (!config.is_object() || !config.contains("space"))
    throw config_error("model config needs a space field");
  const std::string space = config.at("space").get<std::string>();
  if (space == "segment") {
    std::string law = "uniform";
    if (config.contains("law")) law = config.at("law").get<std::string>();
    for (const auto& [key, value] : config.items()) {
      (void)value;
      if (key != "space" && key != "a" && key != "b" && key != "law" && key != "breaks" &&
          key != "values")
        throw config_error("unknown model key: " + key);
    }
    if (law == "uniform") {
      if (!config.contains("a") || !config.contains("b"))
        throw config_error("uniform segment needs a and b");
      return segment_uniform(config.at("a").get<double>(), config.at("b").get<double>());
    }
    if (law == "piecewise") {
      if (!config.contains("breaks") || !config.contains("values"))
        throw config_error("piecewise segment needs breaks and values");
      auto m = segment_piecewise(config.at("breaks").get<std::vector<double>>(),
                                 config.at("values").get<std::vector<double>>());
      if (config.contains("a") && config.at("a").get<double>() != m.segment_left())
        throw config_error("a must match breaks.front()");
      if (config.contains("b") && config.at("b").get<double>() != m.segment_right())
        throw config_error("b must match breaks.back()");
      return m;
    }
    throw config_error("unknown segment law: " + law);
  }
  if (space == "points") {
    for (const auto& [key, value] : config.items()) {
      (void)value;
      if (key != "space" && key != "coords" && key != "masses" && key != "metric")
        throw config_error("unknown model key: " + key);
    }
    if (!config.contains("coords") || !config.contains("masses"))
      throw config_error("point set needs coords and masses");
    auto coords = config.at("coords").get<std::vector<double>>();
    auto masses = config.at("masses").get<std::vector<double>>();
    if (config.contains("metric"))
      return point_set(std::move(coords), std::move(masses),
                       config.at("metric").get<std::vector<std::vector<double>>>());
    return point_set(std::move(coords), std::move(masses));
  }
  throw config_error("unknown space: " + space);
}

nlohmann::json MetricModel::to_json() const {
  if (space_ == Space::segment) {
    if (law_ == SegmentLaw::uniform)
      return {{"space", "segment"},
              {"a", breaks_.front()},
              {"b", breaks_.back()},
              {"law", "uniform"}};
    return {{"space", "segment"}, {"law", "piecewise"}, {"breaks", breaks_}, {"values", dens_}};
  }
  nlohmann::json j = {{"space", "points"}, {"coords", coords_}, {"masses", masses_}};
  if (explicit_metric_) j["metric"] = dist_;
  return j;
}

std::string MetricModel::label() const {
  if (space_ == Space::segment) {
    const std::string range = "[" + fmt(breaks_.front()) + "," + fmt(breaks_.back()) + "]";
    return law_ == SegmentLaw::uniform
               ? "segment" + range + " uniform"
               : "segment" + range + " piecewise(" + std::to_string(dens_.size()) + ")";
  }
  return std::string(explicit_metric_ ? "metric_points(" : "points(") +
         std::to_string(coords_.size()) + ")";
}

std::uint64_t xi_delta(const std::vector<double>& points, double x, double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw domain_error("xi_delta needs delta > 0");
  std::uint64_t c = 0;
  for (double p : points)
    if (std::fabs(p - x) < delta) ++c;
  return c;
}

namespace {

// integrate f over [a, b] split at the model's kink points
double piecewise_quadrature(const MetricModel& model, double delta,
                            const std::function<double(double)>& f, double tol) {
  const auto kinks = model.kink_points(delta);
  const double piece_tol = tol / static_cast<double>(kinks.size());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < kinks.size(); ++i)
    total += num::adaptive_simpson(f, kinks[i], kinks[i + 1], piece_tol);
  return total;
}

}  // namespace

double exact_EM_delta(const MetricModel& model, std::uint64_t n, double delta, std::uint64_t r,
                      std::optional<double> poissonized_Lambda) {
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw domain_error("exact_EM_delta needs delta > 0");
  if (poissonized_Lambda) {
    if (!(*poissonized_Lambda > 0.0) || !std::isfinite(*poissonized_Lambda))
      throw domain_error("poissonized form needs Lambda > 0");
  } else {
    if (n < 1) throw domain_error("exact_EM_delta needs n >= 1");
    if (r > n) throw domain_error("exact_EM_delta needs r <= n");
  }
  const auto kernel = [&](double p) {
    return poissonized_Lambda ? poisson_kernel(p, *poissonized_Lambda, r)
                              : binom_kernel(p, n, r);
  };
  if (model.space() == MetricModel::Space::points) {
    double s = 0.0, comp = 0.0;
    for (std::size_t i = 0; i < model.point_count(); ++i) {
      const double y =
          model.point_mass(i) * kernel(model.ball_mass(model.point_coord(i), delta)) - comp;
      const double t = s + y;
      comp = (t - s) - y;
      s = t;
    }
    return s;
  }
  return piecewise_quadrature(
      model, delta,
      [&](double x) { return model.density_at(x) * kernel(model.ball_mass(x, delta)); }, 1e-10);
}

double nu_delta(const MetricModel& model, double delta, double eps) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw domain_error("nu_delta needs delta > 0");
  if (!(eps > 0.0) || std::isnan(eps)) throw domain_error("nu_delta needs eps > 0");
  if (eps > 1.0) return 0.0;
  if (model.space() == MetricModel::Space::points) {
    double s = 0.0;
    for (std::size_t i = 0; i < model.point_count(); ++i) {
      const double p = model.ball_mass(model.point_coord(i), delta);
      if (p >= eps) s += model.point_mass(i) / p;
    }
    return s;
  }
  // ball mass is linear between kinks; solve the region boundary exactly
  const auto kinks = model.kink_points(delta);
  const double piece_tol = 1e-9 / static_cast<double>(kinks.size());
  const auto integrand = [&](double x) {
    const double dens = model.density_at(x);
    return dens == 0.0 ? 0.0 : dens / model.ball_mass(x, delta);
  };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < kinks.size(); ++i) {
    const double u = kinks[i], v = kinks[i + 1];
    const double gu = model.ball_mass(u, delta), gv = model.ball_mass(v, delta);
    if (gu < eps && gv < eps) continue;
    double lo = u, hi = v;
    if (gu < eps || gv < eps) {
      const double w = u + (eps - gu) * (v - u) / (gv - gu);
      (gu < eps ? lo : hi) = std::clamp(w, u, v);
    }
    if (hi > lo) total += num::adaptive_simpson(integrand, lo, hi, piece_tol);
  }
  return total;
}

double nu_delta_integral(const MetricModel& model, double delta,
                         const std::function<double(double)>& f) {
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw domain_error("nu_delta_integral needs delta > 0");
  if (model.space() == MetricModel::Space::points) {
    double s = 0.0;
    for (std::size_t i = 0; i < model.point_count(); ++i) {
      const double p = model.ball_mass(model.point_coord(i), delta);
      s += model.point_mass(i) * f(p) / p;
    }
    return s;
  }
  return piecewise_quadrature(
      model, delta,
      [&](double x) {
        const double dens = model.density_at(x);
        if (dens == 0.0) return 0.0;
        const double p = model.ball_mass(x, delta);
        return dens * f(p) / p;
      },
      1e-8);
}

namespace {

// minimum number of radius-rho intervals covering the sorted coordinates
std::uint64_t line_cover_count(const std::vector<double>& xs, double rho) {
  std::uint64_t count = 0;
  std::size_t i = 0;
  while (i < xs.size()) {
    const double reach = xs[i] + 2.0 * rho;
    ++count;
    while (i < xs.size() && xs[i] <= reach) ++i;
  }
  return count;
}

std::uint64_t set_cover_count(const std::vector<std::uint32_t>& sets, std::uint32_t full) {
  const std::uint32_t m = full + 1;
  std::vector<std::uint16_t> dp(m, std::numeric_limits<std::uint16_t>::max());
  dp[0] = 0;
  for (std::uint32_t mask = 0; mask < full; ++mask) {
    if (dp[mask] == std::numeric_limits<std::uint16_t>::max()) continue;
    std::uint32_t missing = 0;
    while (mask & (1u << missing)) ++missing;
    for (const std::uint32_t s : sets) {
      if (!(s & (1u << missing))) continue;
      const std::uint32_t next = mask | s;
      dp[next] = std::min<std::uint16_t>(dp[next], dp[mask] + 1);
    }
  }
  return dp[full];
}

std::uint64_t cover_count(const MetricModel& model, double x, double t, double rho) {
  if (model.space() == MetricModel::Space::segment) {
    const double lo = std::max(model.segment_left(), x - t);
    const double hi = std::min(model.segment_right(), x + t);
    if (!(hi > lo)) return 0;
    return static_cast<std::uint64_t>(std::ceil((hi - lo) / (2.0 * rho) - 1e-12));
  }
  if (!model.has_explicit_metric()) {
    std::vector<double> member;
    for (std::size_t i = 0; i < model.point_count(); ++i)
      if (std::fabs(model.point_coord(i) - x) < t) member.push_back(model.point_coord(i));
    std::sort(member.begin(), member.end());
    return line_cover_count(member, rho);
  }
  std::size_t ix = model.point_count();
  for (std::size_t i = 0; i < model.point_count(); ++i)
    if (model.point_coord(i) == x) ix = i;
  if (ix == model.point_count())
    throw domain_error("explicit-metric cover centers must be point coordinates");
  std::vector<std::size_t> member;
  for (std::size_t i = 0; i < model.point_count(); ++i)
    if (model.distance(ix, i) < t) member.push_back(i);
  if (member.empty()) return 0;
  if (member.size() <= 20) {
    std::vector<std::uint32_t> sets;
    for (const std::size_t c : member) {
      std::uint32_t s = 0;
      for (std::size_t k = 0; k < member.size(); ++k)
        if (model.distance(c, member[k]) <= rho) s |= 1u << k;
      sets.push_back(s);
    }
    return set_cover_count(sets, (1u << member.size()) - 1);
  }
  std::vector<bool> covered(member.size(), false);
  std::uint64_t count = 0;
  std::size_t left = member.size();
  while (left > 0) {
    std::size_t best = 0, best_gain = 0;
    for (std::size_t c = 0; c < member.size(); ++c) {
      std::size_t gain = 0;
      for (std::size_t k = 0; k < member.size(); ++k)
        if (!covered[k] && model.distance(member[c], member[k]) <= rho) ++gain;
      if (gain > best_gain) {
        best_gain = gain;
        best = c;
      }
    }
    for (std::size_t k = 0; k < member.size(); ++k)
      if (!covered[k] && model.distance(member[best], member[k]) <= rho) {
        covered[k] = true;
        --left;
      }
    ++count;
  }
  return count;
}

}  // namespace

BoundResult cover_upper(const MetricModel& model, std::uint64_t n, double delta,
                        const std::vector<CoverCandidate>& candidates) {
  if (n < 1) throw domain_error("cover_upper needs n >= 1");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw domain_error("cover_upper needs delta > 0");
  BoundResult out;
  out.source = "cover_upper";
  out.is_upper = true;
  out.value = kInf;

  std::vector<CoverCandidate> all = candidates;
  const double diam = model.diameter();
  const double rho0 = 0.5 * delta;
  std::vector<double> centers;
  if (model.space() == MetricModel::Space::segment) {
    const double a = model.segment_left(), b = model.segment_right();
    centers = {a + 0.25 * (b - a), a + 0.5 * (b - a), a + 0.75 * (b - a)};
  } else {
    const std::size_t s = model.point_count();
    const std::size_t step = s <= 16 ? 1 : s / 16;
    for (std::size_t i = 0; i < s; i += step) centers.push_back(model.point_coord(i));
  }
  for (const double cx : centers)
    for (const double ft : {1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125})
      all.push_back({cx, std::max(ft * diam, delta), rho0});

  std::optional<CoverCandidate> chosen;
  std::uint64_t chosen_cover = 0;
  for (const auto& c : all) {
    if (!(c.rho > 0.0) || c.rho > rho0 * (1.0 + 1e-12)) {
      out.conditions.push_back({"candidate rejected", false,
                                "rho > delta/2 for (x=" + fmt(c.x) + ", t=" + fmt(c.t) +
                                    ", rho=" + fmt(c.rho) + ")"});
      continue;
    }
    if (!(c.t > 0.0) || !std::isfinite(c.t) || !std::isfinite(c.x)) {
      out.conditions.push_back({"candidate rejected", false,
                                "need finite x and t > 0 for (x=" + fmt(c.x) +
                                    ", t=" + fmt(c.t) + ")"});
      continue;
    }
    double tau;
    std::uint64_t cover;
    try {
      tau = 1.0 - model.ball_mass(c.x, c.t);
      cover = cover_count(model, c.x, c.t, c.rho);
    } catch (const domain_error& e) {
      out.conditions.push_back({"candidate rejected", false, e.what()});
      continue;
    }
    const double val =
        tau + static_cast<double>(cover) / (static_cast<double>(n) * std::exp(1.0));
    if (val < out.value) {
      out.value = val;
      chosen = c;
      chosen_cover = cover;
    }
  }
  if (!chosen) {
    out.applicable = false;
    return out;
  }
  out.conditions.push_back({"selected cover", true,
                            "x=" + fmt(chosen->x) + ", t=" + fmt(chosen->t) +
                                ", rho=" + fmt(chosen->rho) +
                                ", N=" + std::to_string(chosen_cover)});
  return out;
}

double M_delta_empirical(const MetricModel& model, const std::vector<double>& sample,
                         double delta, std::uint64_t r, std::uint64_t probes,
                         const SeedSpec& seed) {
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw domain_error("M_delta_empirical needs delta > 0");
  if (probes < 1) throw domain_error("M_delta_empirical needs probes >= 1");
  if (model.space() == MetricModel::Space::points) {
    // the conditional probability is a finite sum over the atoms
    double s = 0.0;
    if (!model.has_explicit_metric()) {
      for (std::size_t i = 0; i < model.point_count(); ++i)
        if (xi_delta(sample, model.point_coord(i), delta) == r) s += model.point_mass(i);
      return s;
    }
    std::vector<std::size_t> idx;
    idx.reserve(sample.size());
    for (const double v : sample) {
      std::size_t found = model.point_count();
      for (std::size_t i = 0; i < model.point_count(); ++i)
        if (model.point_coord(i) == v) found = i;
      if (found == model.point_count())
        throw domain_error("explicit-metric samples must consist of point coordinates");
      idx.push_back(found);
    }
    for (std::size_t i = 0; i < model.point_count(); ++i) {
      std::uint64_t c = 0;
      for (const std::size_t j : idx)
        if (model.distance(i, j) < delta) ++c;
      if (c == r) s += model.point_mass(i);
    }
    return s;
  }
  std::vector<double> sorted = sample;
  std::sort(sorted.begin(), sorted.end());
  std::uint64_t hits = 0;
  for (std::uint64_t j = 0; j < probes; ++j) {
    const double x = model.draw_unit(unit_from_seed(seed.replicate_seed(j)));
    const auto lo = std::upper_bound(sorted.begin(), sorted.end(), x - delta);
    const auto hi = std::lower_bound(sorted.begin(), sorted.end(), x + delta);
    if (static_cast<std::uint64_t>(hi - lo) == r) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(probes);
}

}  // namespace occu
