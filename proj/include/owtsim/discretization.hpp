#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "owtsim/frustum.hpp"
#include "owtsim/station.hpp"

namespace owtsim {

// Rotational spring constant of a joint in bending: K = E*I_A / l, with I_A
// the second moment of area at the nodal cross-section and l the joint
// spacing.
inline double bending_spring_constant(double youngs_modulus, double second_moment,
                                      double spacing) {
  if (spacing == 0) throw ConfigError("bending_spring_constant: zero joint spacing");
  if (!(youngs_modulus > 0) || !(second_moment > 0) || !(spacing > 0))
    throw ConfigError("bending_spring_constant: inputs must be positive");
  return youngs_modulus * second_moment / spacing;
}

// Torsion counterpart: K_t = G*J / l.
inline double torsion_spring_constant(double shear_modulus, double polar_moment,
                                      double spacing) {
  if (spacing == 0) throw ConfigError("torsion_spring_constant: zero joint spacing");
  if (!(shear_modulus > 0) || !(polar_moment > 0) || !(spacing > 0))
    throw ConfigError("torsion_spring_constant: inputs must be positive");
  return shear_modulus * polar_moment / spacing;
}

// Interior elevations that element boundaries must land on (segment
// interfaces such as the mudline). Elements are distributed over the
// sub-segments proportionally to length.
struct RefinementPolicy {
  std::vector<double> break_elevations;
};

// Nodal cross-section data for one joint cluster (element mid-node).
struct JointSection {
  double elevation = 0;         // m
  double spacing = 0;           // tributary length l, m
  double bending_rigidity = 0;  // E*I_A, N m^2
  double torsion_rigidity = 0;  // G*J, N m^2
  double bending_k = 0;         // N m / rad
  double torsion_k = 0;         // N m / rad
};

struct DiscretizationPlan {
  std::vector<double> element_boundaries;  // n+1 elevations, ascending
  std::vector<double> joint_elevations;    // n mid-nodes
  std::vector<JointSection> joints;
};

// A frustum rigid body placed on the structure axis.
struct PositionedBody {
  FrustumSegment frustum;
  double base_elevation = 0;
};

namespace detail {

// Splits [lo, hi] into per-sub-segment equal-length elements, honoring break
// elevations and distributing n proportionally to sub-segment length.
inline std::vector<double> element_boundaries(double lo, double hi, int n,
                                              const RefinementPolicy& policy) {
  std::vector<double> breaks{lo};
  for (double b : policy.break_elevations) {
    if (b < lo - 1e-9 || b > hi + 1e-9)
      throw ConfigError("refinement break elevation " + format_double(b) +
                        " outside station range");
    if (b > lo + 1e-9 && b < hi - 1e-9) breaks.push_back(b);
  }
  breaks.push_back(hi);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-9; }),
               breaks.end());

  int segments = static_cast<int>(breaks.size()) - 1;
  if (n < segments)
    throw ConfigError("need at least " + std::to_string(segments) + " elements for " +
                      std::to_string(segments) + " sub-segments");
  double total = hi - lo;
  std::vector<int> count(segments, 1);
  int assigned = segments;
  // Largest-remainder allocation of the leftover elements.
  std::vector<std::pair<double, int>> want(segments);
  for (int s = 0; s < segments; ++s)
    want[s] = {(breaks[s + 1] - breaks[s]) / total * n, s};
  while (assigned < n) {
    int best = 0;
    double best_deficit = -1e300;
    for (int s = 0; s < segments; ++s) {
      double deficit = want[s].first - count[s];
      if (deficit > best_deficit) {
        best_deficit = deficit;
        best = s;
      }
    }
    ++count[best];
    ++assigned;
  }
  std::vector<double> bounds;
  bounds.push_back(lo);
  for (int s = 0; s < segments; ++s) {
    double a = breaks[s], b = breaks[s + 1];
    for (int i = 1; i <= count[s]; ++i) bounds.push_back(a + (b - a) * i / count[s]);
  }
  return bounds;
}

// Frustum pieces spanning [z_lo, z_hi], split at interior stations so the
// piecewise-linear taper is represented exactly. Each piece carries its
// mass-exact effective density.
inline void append_bodies(const StationTable& table, double z_lo, double z_hi,
                          std::vector<PositionedBody>& out) {
  std::vector<double> cuts{z_lo};
  for (const auto& s : table.stations())
    if (s.elevation > z_lo + 1e-12 && s.elevation < z_hi - 1e-12) cuts.push_back(s.elevation);
  cuts.push_back(z_hi);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double a = cuts[i], b = cuts[i + 1];
    SectionProperties pa = table.section_at(a);
    SectionProperties pb = table.section_at(b);
    FrustumSegment f;
    f.h = b - a;
    f.outer_b = pa.outer_radius();
    f.outer_t = pb.outer_radius();
    f.inner_b = pa.inner_radius();
    f.inner_t = pb.inner_radius();
    f.density = 1.0;
    double volume = frustum_mass_properties(f).volume;
    f.density = table.mass_integral(a, b) / volume;
    out.push_back({f, a});
  }
}

}  // namespace detail

// Splits the structure into n elements, each cut at its mid-node into two
// frustum rigid bodies, and derives the joint-cluster spring data from the
// interpolated mid-node cross-sections.
inline std::pair<std::vector<PositionedBody>, DiscretizationPlan> discretize_structure(
    const StationTable& table, int n_elements, const RefinementPolicy& policy = {}) {
  if (n_elements < 1) throw ConfigError("discretize_structure: need n_elements >= 1");
  DiscretizationPlan plan;
  plan.element_boundaries =
      detail::element_boundaries(table.bottom(), table.top(), n_elements, policy);

  std::vector<PositionedBody> bodies;
  int n = static_cast<int>(plan.element_boundaries.size()) - 1;
  for (int e = 0; e < n; ++e) {
    double a = plan.element_boundaries[e];
    double b = plan.element_boundaries[e + 1];
    double mid = 0.5 * (a + b);
    plan.joint_elevations.push_back(mid);
    detail::append_bodies(table, a, mid, bodies);
    detail::append_bodies(table, mid, b, bodies);
  }

  // Tributary spacing: midpoints between adjacent joints, closed by the root
  // and the free end so that spacings sum to the flexible length.
  const auto& jz = plan.joint_elevations;
  for (int j = 0; j < n; ++j) {
    double lo = (j == 0) ? table.bottom() : 0.5 * (jz[j - 1] + jz[j]);
    double hi = (j == n - 1) ? table.top() : 0.5 * (jz[j] + jz[j + 1]);
    SectionProperties sec = table.section_at(jz[j]);
    JointSection joint;
    joint.elevation = jz[j];
    joint.spacing = hi - lo;
    joint.bending_rigidity = sec.bending_rigidity();
    joint.torsion_rigidity = sec.torsion_rigidity();
    joint.bending_k =
        bending_spring_constant(sec.youngs_modulus, sec.second_moment(), joint.spacing);
    joint.torsion_k =
        torsion_spring_constant(sec.shear_modulus, sec.polar_moment(), joint.spacing);
    plan.joints.push_back(joint);
  }
  return {std::move(bodies), std::move(plan)};
}

}  // namespace owtsim
