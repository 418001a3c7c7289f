#pragma once

#include <cmath>

#include "owtsim/common.hpp"
#include "owtsim/sea.hpp"

namespace owtsim {

// A slice of a submerged rigid body for strip-theory loading. Elevation is
// relative to the still water line (negative submerged).
struct StripElement {
  double z = 0;       // m, strip center relative to SWL
  double length = 0;  // m
  double diameter = 0;

  void validate() const {
    if (!(length > 0)) throw ConfigError("strip length must be positive");
    if (!(diameter > 0)) throw ConfigError("strip diameter must be positive");
  }
};

// Fluid inertia reacting to structural acceleration: m_a = rho_w Ca pi D^2/4
// per unit length. Folded into the mass matrix by the dynamics layer.
inline double added_mass_per_length(const SeaStateConfig& cfg, double diameter) {
  if (!(diameter > 0)) throw ConfigError("added_mass_per_length: diameter must be positive");
  return cfg.rho_w * cfg.ca * 0.25 * kPi * diameter * diameter;
}

// Relative-form Morison load per unit length for one horizontal direction:
// added mass on the structure acceleration, inertia on the fluid
// acceleration, and quadratic relative drag.
inline double morison_strip_force(const StripElement& strip, double u_w, double u_w_dot,
                                  double u_s, double u_s_dot, const SeaStateConfig& cfg) {
  strip.validate();
  double area = 0.25 * kPi * strip.diameter * strip.diameter;
  double rel = u_w - u_s;
  return -cfg.rho_w * cfg.ca * area * u_s_dot +
         cfg.rho_w * (1.0 + cfg.ca) * area * u_w_dot +
         0.5 * cfg.rho_w * cfg.cd * strip.diameter * rel * std::abs(rel);
}

// Excitation part of the Morison load (everything except the structural
// added-mass term, which lives on the left-hand side).
inline double morison_excitation_force(const StripElement& strip, double u_w, double u_w_dot,
                                       double u_s, const SeaStateConfig& cfg) {
  return morison_strip_force(strip, u_w, u_w_dot, u_s, 0.0, cfg);
}

}  // namespace owtsim
