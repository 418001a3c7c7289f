#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "owtsim/common.hpp"
#include "owtsim/csv.hpp"

namespace owtsim {

// Lateral resistance curve p(y) at one depth below the mudline. p is force
// per unit length of pile; beyond the last tabulated y the resistance
// plateaus.
struct PYCurve {
  double depth = 0;              // m below mudline, positive down
  std::vector<double> y_points;  // m, strictly increasing, starts at 0
  std::vector<double> p_points;  // N/m, p(0)=0, non-decreasing
};

class PYCurveSet {
 public:
  PYCurveSet() = default;

  explicit PYCurveSet(std::vector<PYCurve> curves) : curves_(std::move(curves)) { validate(); }

  // Long-format CSV: depth_m,y_m,p_Npm with rows grouped by depth.
  static PYCurveSet from_csv(const std::string& path) {
    CsvTable csv = read_csv(path);
    int cd = csv.column("depth_m"), cy = csv.column("y_m"), cp = csv.column("p_Npm");
    if (cd < 0 || cy < 0 || cp < 0)
      throw ConfigError(path + ": need columns depth_m,y_m,p_Npm");
    std::vector<PYCurve> curves;
    for (const auto& r : csv.rows) {
      if (curves.empty() || r[cd] != curves.back().depth) {
        curves.push_back({r[cd], {}, {}});
      }
      curves.back().y_points.push_back(r[cy]);
      curves.back().p_points.push_back(r[cp]);
    }
    return PYCurveSet(std::move(curves));
  }

  const std::vector<PYCurve>& curves() const { return curves_; }
  bool empty() const { return curves_.empty(); }

 private:
  void validate() const {
    if (curves_.empty()) throw ConfigError("p-y curve set is empty");
    for (std::size_t c = 0; c < curves_.size(); ++c) {
      const PYCurve& cur = curves_[c];
      if (c > 0 && cur.depth <= curves_[c - 1].depth)
        throw ConfigError("p-y curve depths must be strictly increasing");
      if (cur.y_points.size() < 2 || cur.y_points.size() != cur.p_points.size())
        throw ConfigError("p-y curve at depth " + format_double(cur.depth) +
                          ": need >= 2 (y, p) pairs");
      if (cur.y_points.front() != 0 || cur.p_points.front() != 0)
        throw ConfigError("p-y curve at depth " + format_double(cur.depth) +
                          ": must pass through the origin");
      for (std::size_t i = 1; i < cur.y_points.size(); ++i) {
        if (cur.y_points[i] <= cur.y_points[i - 1])
          throw ConfigError("p-y curve y values must be strictly increasing");
        if (cur.p_points[i] < cur.p_points[i - 1])
          throw ConfigError("p-y curve p values must be non-decreasing");
      }
    }
  }

  std::vector<PYCurve> curves_;
};

// One soil node: a strip of embedded pile of length l_s with a nonlinear
// spring and a displacement-dependent dashpot in each lateral direction.
struct SoilNodeConfig {
  double elevation = 0;     // m (negative below mudline)
  double strip_length = 0;  // l_s, m
  double beta_s = 0;        // damping factor, dimensionless
  double f_load = 0;        // dominant load frequency, Hz

  void validate() const {
    if (!(strip_length > 0)) throw ConfigError("soil node strip length must be positive");
    if (beta_s < 0) throw ConfigError("soil damping factor must be >= 0");
    if (!(f_load > 0)) throw ConfigError("soil f_load must be positive");
  }
};

namespace detail {

// Piecewise-linear p(|y|) on one curve, plateauing past the last point.
inline double curve_resistance(const PYCurve& c, double y_abs) {
  if (y_abs >= c.y_points.back()) return c.p_points.back();
  auto it = std::upper_bound(c.y_points.begin(), c.y_points.end(), y_abs);
  std::size_t i = static_cast<std::size_t>(it - c.y_points.begin());
  if (i == 0) return 0.0;
  double w = (y_abs - c.y_points[i - 1]) / (c.y_points[i] - c.y_points[i - 1]);
  return c.p_points[i - 1] + w * (c.p_points[i] - c.p_points[i - 1]);
}

inline double curve_initial_slope(const PYCurve& c) {
  return (c.p_points[1] - c.p_points[0]) / (c.y_points[1] - c.y_points[0]);
}

}  // namespace detail

// Soil resistance per unit length at a given depth and lateral displacement.
// Odd in y, linear between bracketing depth curves, clamped outside the depth
// range.
inline double lateral_resistance(const PYCurveSet& curves, double depth, double y) {
  if (curves.empty()) throw ConfigError("lateral_resistance: empty curve set");
  const auto& cs = curves.curves();
  double y_abs = std::abs(y);
  double sign = y < 0 ? -1.0 : 1.0;
  double p;
  if (depth <= cs.front().depth) {
    p = detail::curve_resistance(cs.front(), y_abs);
  } else if (depth >= cs.back().depth) {
    p = detail::curve_resistance(cs.back(), y_abs);
  } else {
    auto hi = std::upper_bound(cs.begin(), cs.end(), depth,
                               [](double d, const PYCurve& c) { return d < c.depth; });
    const PYCurve& b = *(hi - 1);
    const PYCurve& t = *hi;
    double w = (depth - b.depth) / (t.depth - b.depth);
    p = (1.0 - w) * detail::curve_resistance(b, y_abs) +
        w * detail::curve_resistance(t, y_abs);
  }
  return sign * p;
}

inline constexpr double kSecantYTol = 1e-9;  // m

// Initial tangent slope of the interpolated curve at a depth, N/m per m.
inline double initial_slope(const PYCurveSet& curves, double depth) {
  if (curves.empty()) throw ConfigError("initial_slope: empty curve set");
  const auto& cs = curves.curves();
  if (depth <= cs.front().depth) return detail::curve_initial_slope(cs.front());
  if (depth >= cs.back().depth) return detail::curve_initial_slope(cs.back());
  auto hi = std::upper_bound(cs.begin(), cs.end(), depth,
                             [](double d, const PYCurve& c) { return d < c.depth; });
  const PYCurve& b = *(hi - 1);
  const PYCurve& t = *hi;
  double w = (depth - b.depth) / (t.depth - b.depth);
  return (1.0 - w) * detail::curve_initial_slope(b) + w * detail::curve_initial_slope(t);
}

// Secant soil-spring coefficient K_s(y) = p(y) l_s / y, with the tangent
// limit below |y| = 1e-9 m.
inline double secant_stiffness(const PYCurveSet& curves, double depth, double y,
                               double strip_length) {
  if (std::abs(y) <= kSecantYTol) return initial_slope(curves, depth) * strip_length;
  return lateral_resistance(curves, depth, y) * strip_length / y;
}

// Kelvin-Voigt dashpot coefficient C_s = K_s beta_s / (pi f_load).
inline double damping_coefficient(double secant_k, double beta_s, double f_load) {
  if (!(f_load > 0)) throw ConfigError("damping_coefficient: f_load must be positive");
  return secant_k * beta_s / (kPi * f_load);
}

// Nodal reaction on the structure, spring plus dashpot, one lateral
// direction: F = -(p(y) l_s + C_s(y) y_dot).
inline double soil_reaction_force(const PYCurveSet& curves, const SoilNodeConfig& cfg, double y,
                                  double y_dot) {
  double depth = -cfg.elevation;
  double spring = lateral_resistance(curves, depth, y) * cfg.strip_length;
  double ks = secant_stiffness(curves, depth, y, cfg.strip_length);
  double cs = damping_coefficient(ks, cfg.beta_s, cfg.f_load);
  return -(spring + cs * y_dot);
}

}  // namespace owtsim
