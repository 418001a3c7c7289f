#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "owtsim/common.hpp"

namespace owtsim {

// Irregular sea parameters plus the Morison coefficients shared by all
// strips.
struct SeaStateConfig {
  double hs = 0;            // significant wave height, m
  double tp = 0;            // peak spectral period, s
  double water_depth = 0;   // m
  double rho_w = 1025.0;    // kg/m^3
  double ca = 1.0;          // added mass coefficient
  double cd = 1.0;          // drag coefficient
  int n_components = 200;
  double f_min = 0;         // Hz; 0 = auto (half the peak frequency)
  double f_max = 0;         // Hz; 0 = auto (five times the peak frequency)
  std::uint64_t seed = 1;

  double peak_frequency() const { return 1.0 / tp; }

  void validate() const {
    if (hs < 0) throw ConfigError("sea state: Hs must be >= 0");
    if (!(tp > 0)) throw ConfigError("sea state: Tp must be positive");
    if (!(water_depth > 0)) throw ConfigError("sea state: water depth must be positive");
    if (n_components < 1) throw ConfigError("sea state: need >= 1 component");
    double lo = band_min(), hi = band_max();
    if (!(lo > 0) || !(lo < hi)) throw ConfigError("sea state: need 0 < f_min < f_max");
  }

  double band_min() const { return f_min > 0 ? f_min : 0.5 * peak_frequency(); }
  double band_max() const { return f_max > 0 ? f_max : 5.0 * peak_frequency(); }
};

// Pierson-Moskowitz density in frequency, ITTC two-parameter form. Integrates
// to Hs^2/16 and peaks at f_p = 1/Tp.
inline double pm_spectrum_density(double f, double hs, double tp) {
  if (!(f > 0)) throw ConfigError("pm_spectrum_density: frequency must be positive");
  double fp = 1.0 / tp;
  double r = fp / f;
  double r4 = r * r * r * r;
  return (5.0 / 16.0) * hs * hs * r4 * (1.0 / f) * std::exp(-1.25 * r4);
}

// Solves (2 pi f)^2 = g k tanh(k d) for k by Newton iteration from the
// deep-water guess.
inline double dispersion_wavenumber(double f, double depth, double rel_tol = 1e-12) {
  double omega = 2.0 * kPi * f;
  double target = omega * omega;
  double k = target / kGravity;  // deep water
  for (int it = 0; it < 100; ++it) {
    double kd = k * depth;
    double th = std::tanh(kd);
    double g = kGravity * k * th - target;
    double dg = kGravity * (th + kd * (1.0 - th * th));
    double step = g / dg;
    k -= step;
    if (std::abs(step) <= rel_tol * k) return k;
  }
  throw SolverError("dispersion_wavenumber: no convergence at f=" + format_double(f));
}

struct WaveComponent {
  double amplitude = 0;   // m
  double frequency = 0;   // Hz
  double omega = 0;       // rad/s
  double wavenumber = 0;  // 1/m
  double phase = 0;       // rad
};

// A seeded sum-of-components realization of the sea state. Waves travel in
// +x; kinematics use the undisplaced structure axis (long-wavelength
// assumption), so x = 0 throughout the simulator.
struct WaveRealization {
  std::vector<WaveComponent> components;
  double water_depth = 0;
  bool band_warning = false;  // set when the band misses > 5% of Hs^2/16

  double component_variance() const {
    double v = 0;
    for (const auto& c : components) v += 0.5 * c.amplitude * c.amplitude;
    return v;
  }

  double surface_elevation(double x, double t) const {
    double eta = 0;
    for (const auto& c : components)
      eta += c.amplitude * std::cos(c.wavenumber * x - c.omega * t + c.phase);
    return eta;
  }

  // Horizontal Airy velocity and acceleration at depth z (z <= 0 below the
  // still water line). No stretching: z > 0 is rejected.
  void kinematics(double z, double x, double t, double& u, double& u_dot) const {
    if (z > 1e-12) throw ConfigError("wave kinematics requested above the still water line");
    if (z < -water_depth) throw ConfigError("wave kinematics requested below the seabed");
    z = std::min(z, 0.0);
    u = 0;
    u_dot = 0;
    for (const auto& c : components) {
      double kd = c.wavenumber * water_depth;
      double depth_factor = std::cosh(c.wavenumber * (z + water_depth)) / std::sinh(kd);
      double arg = c.wavenumber * x - c.omega * t + c.phase;
      u += c.amplitude * c.omega * depth_factor * std::cos(arg);
      u_dot += c.amplitude * c.omega * c.omega * depth_factor * std::sin(arg);
    }
  }
};

// Equal-df binning of the PM spectrum over [f_min, f_max] with uniform random
// phases from the seeded generator. Component amplitude a_j encodes the bin
// area: a_j = sqrt(2 S(f_j) df).
inline WaveRealization synthesize_sea(const SeaStateConfig& cfg) {
  cfg.validate();
  WaveRealization out;
  out.water_depth = cfg.water_depth;
  double lo = cfg.band_min(), hi = cfg.band_max();
  double df = (hi - lo) / cfg.n_components;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * kPi);
  out.components.reserve(cfg.n_components);
  for (int j = 0; j < cfg.n_components; ++j) {
    WaveComponent c;
    c.frequency = lo + (j + 0.5) * df;
    c.omega = 2.0 * kPi * c.frequency;
    c.amplitude = std::sqrt(2.0 * pm_spectrum_density(c.frequency, cfg.hs, cfg.tp) * df);
    c.wavenumber = dispersion_wavenumber(c.frequency, cfg.water_depth);
    c.phase = phase_dist(rng);
    out.components.push_back(c);
  }
  if (cfg.hs > 0) {
    double total = cfg.hs * cfg.hs / 16.0;
    if (out.component_variance() < 0.95 * total) out.band_warning = true;
  }
  return out;
}

}  // namespace owtsim
