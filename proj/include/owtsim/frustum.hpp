#pragma once

#include <cmath>
#include <vector>

#include "owtsim/common.hpp"

namespace owtsim {

// Hollow conical frustum with inner/outer radii varying linearly from base to
// top. Used as the rigid-body shape of each half-element.
struct FrustumSegment {
  double h = 0;        // height, m
  double outer_b = 0;  // outer radius at base, m
  double outer_t = 0;  // outer radius at top, m
  double inner_b = 0;  // inner radius at base, m
  double inner_t = 0;  // inner radius at top, m
  double density = 0;  // kg/m^3

  void validate() const {
    if (!(h > 0)) throw InvalidGeometryError("frustum height must be positive");
    if (!(outer_b > inner_b) || inner_b < 0 || !(outer_t > inner_t) || inner_t < 0)
      throw InvalidGeometryError("frustum radii must satisfy outer > inner >= 0");
    if (!(density > 0)) throw InvalidGeometryError("frustum density must be positive");
  }

  double outer_at(double z) const { return outer_b + (outer_t - outer_b) * z / h; }
  double inner_at(double z) const { return inner_b + (inner_t - inner_b) * z / h; }
};

// Mass properties of an axisymmetric rigid body. Inertias are about the
// center of mass with z along the body axis; z_cm is measured from the base.
struct RigidBodyProperties {
  double volume = 0;  // m^3
  double mass = 0;    // kg
  double z_cm = 0;    // m above body base
  double I_xx = 0;    // kg m^2, about CM
  double I_yy = 0;
  double I_zz = 0;
};

namespace detail {
// Integrals of powers of a linearly varying radius r(z): a at z=0, b at z=h.
inline double int_r2(double a, double b, double h) {
  return h * (a * a + a * b + b * b) / 3.0;
}
inline double int_z_r2(double a, double b, double h) {
  return h * h * (a * a + 2.0 * a * b + 3.0 * b * b) / 12.0;
}
inline double int_z2_r2(double a, double b, double h) {
  return h * h * h * (a * a + 3.0 * a * b + 6.0 * b * b) / 30.0;
}
inline double int_r4(double a, double b, double h) {
  return h * (a * a * a * a + a * a * a * b + a * a * b * b + a * b * b * b + b * b * b * b) / 5.0;
}
}  // namespace detail

// Closed-form volume, center of mass, and inertia of a hollow conical
// frustum. The axial moment integrals are evaluated about the base plane and
// transferred to the center of mass.
inline RigidBodyProperties frustum_mass_properties(const FrustumSegment& seg) {
  seg.validate();
  using namespace detail;
  RigidBodyProperties p;
  double a_o = seg.outer_b, b_o = seg.outer_t;
  double a_i = seg.inner_b, b_i = seg.inner_t;

  p.volume = kPi * (int_r2(a_o, b_o, seg.h) - int_r2(a_i, b_i, seg.h));
  p.mass = seg.density * p.volume;
  p.z_cm = kPi * (int_z_r2(a_o, b_o, seg.h) - int_z_r2(a_i, b_i, seg.h)) / p.volume;

  p.I_zz = 0.5 * kPi * seg.density * (int_r4(a_o, b_o, seg.h) - int_r4(a_i, b_i, seg.h));
  double Ixx_base = 0.5 * p.I_zz + kPi * seg.density *
                                       (int_z2_r2(a_o, b_o, seg.h) - int_z2_r2(a_i, b_i, seg.h));
  p.I_xx = Ixx_base - p.mass * p.z_cm * p.z_cm;
  p.I_yy = p.I_xx;
  return p;
}

// Stacks axisymmetric bodies along a shared axis. offsets[i] is the base
// elevation of body i above the composite base. Mass is additive, the CM is
// mass-weighted, and inertias combine with parallel-axis transfers.
inline RigidBodyProperties compose_axisymmetric(const std::vector<RigidBodyProperties>& parts,
                                                const std::vector<double>& offsets) {
  if (parts.empty() || parts.size() != offsets.size())
    throw InvalidGeometryError("compose_axisymmetric: mismatched inputs");
  RigidBodyProperties out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    out.volume += parts[i].volume;
    out.mass += parts[i].mass;
    out.z_cm += parts[i].mass * (offsets[i] + parts[i].z_cm);
  }
  out.z_cm /= out.mass;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    double d = offsets[i] + parts[i].z_cm - out.z_cm;
    out.I_xx += parts[i].I_xx + parts[i].mass * d * d;
    out.I_zz += parts[i].I_zz;
  }
  out.I_yy = out.I_xx;
  return out;
}

}  // namespace owtsim
