#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "owtsim/discretization.hpp"
#include "owtsim/frustum.hpp"
#include "owtsim/station.hpp"

using namespace owtsim;

namespace {

// Brute-force midpoint quadrature over (z, r, phi) for a hollow frustum.
// Written independently of the closed forms; only inner_at/outer_at geometry
// is shared.
struct QuadratureProps {
  double volume = 0, z_cm = 0, I_xx = 0, I_zz = 0;
};

QuadratureProps quadrature_frustum(const FrustumSegment& f, int nz, int nr, int nphi) {
  double v = 0, mz = 0, irr = 0, iyz = 0;  // V, int z, int r^2, int (y^2 + z^2)
  const double dz = f.h / nz;
  const double dphi = 2.0 * kPi / nphi;
  for (int iz = 0; iz < nz; ++iz) {
    const double z = (iz + 0.5) * dz;
    const double ri = f.inner_at(z);
    const double ro = f.outer_at(z);
    const double dr = (ro - ri) / nr;
    for (int ir = 0; ir < nr; ++ir) {
      const double r = ri + (ir + 0.5) * dr;
      for (int ip = 0; ip < nphi; ++ip) {
        const double phi = (ip + 0.5) * dphi;
        const double w = r * dr * dz * dphi;
        const double y = r * std::sin(phi);
        v += w;
        mz += z * w;
        irr += r * r * w;
        iyz += (y * y + z * z) * w;
      }
    }
  }
  QuadratureProps q;
  q.volume = v;
  q.z_cm = mz / v;
  q.I_zz = f.density * irr;
  q.I_xx = f.density * (iyz - v * q.z_cm * q.z_cm);
  return q;
}

std::filesystem::path write_temp_csv(const std::string& name, const std::string& body) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << body;
  return path;
}

constexpr const char* kStationHeader =
    "elevation_m,outer_diameter_m,wall_thickness_m,density_kgm3,E_Pa,G_Pa\n";

StationTable uniform_table(double length, double d, double t, double rho = 8500,
                           double e = 2.1e11, double g = 8.08e10) {
  std::vector<Station> s = {{0, d, t, rho, e, g}, {length, d, t, rho, e, g}};
  return StationTable(s);
}

}  // namespace

TEST(Frustum, HollowCylinderClosedForms) {
  FrustumSegment f{10.0, 2.0, 2.0, 1.0, 1.0, 8500.0};
  RigidBodyProperties p = frustum_mass_properties(f);
  EXPECT_NEAR(p.volume, 30.0 * kPi, 1e-9);
  EXPECT_NEAR(p.mass, 8500.0 * 30.0 * kPi, 1e-6);
  EXPECT_NEAR(p.z_cm, 5.0, 1e-12);
  EXPECT_NEAR(p.I_zz, 0.5 * p.mass * (4.0 + 1.0), 1e-6);
  // Thick-walled tube about a transverse CM axis.
  double ixx = p.mass * (3.0 * (4.0 + 1.0) + 100.0) / 12.0;
  EXPECT_NEAR(p.I_xx, ixx, 1e-6 * ixx);
  EXPECT_DOUBLE_EQ(p.I_xx, p.I_yy);
}

TEST(Frustum, SolidConeCentroid) {
  FrustumSegment f{6.0, 3.0, 0.0, 0.0, 0.0, 1000.0};
  // Degenerate top (outer = inner = 0) is rejected by validate; nudge the
  // apex by an amount small enough not to disturb the centroid check.
  f.outer_t = 1e-9;
  RigidBodyProperties p = frustum_mass_properties(f);
  EXPECT_NEAR(p.volume, kPi * 9.0 * 6.0 / 3.0, 1e-6);
  EXPECT_NEAR(p.z_cm, 1.5, 1e-8);
}

TEST(Frustum, GeneralHollowFrustumMatchesQuadrature) {
  FrustumSegment f{5.0, 3.0, 2.5, 2.9, 2.42, 8500.0};
  RigidBodyProperties p = frustum_mass_properties(f);
  QuadratureProps q = quadrature_frustum(f, 1200, 240, 64);
  EXPECT_NEAR(p.volume, q.volume, 1e-6 * q.volume);
  EXPECT_NEAR(p.z_cm, q.z_cm, 1e-6 * q.z_cm);
  EXPECT_NEAR(p.I_zz, q.I_zz, 1e-6 * q.I_zz);
  EXPECT_NEAR(p.I_xx, q.I_xx, 1e-6 * q.I_xx);
  EXPECT_GE(p.I_xx + p.I_yy, p.I_zz);
  EXPECT_GT(p.z_cm, 0.0);
  EXPECT_LT(p.z_cm, f.h);
}

TEST(Frustum, DegenerateGeometryRejected) {
  EXPECT_THROW(frustum_mass_properties({0.0, 2, 2, 1, 1, 8500}), InvalidGeometryError);
  EXPECT_THROW(frustum_mass_properties({5.0, 1, 2, 1, 1, 8500}), InvalidGeometryError);
  EXPECT_THROW(frustum_mass_properties({5.0, 2, 2, 1, 1, 0.0}), InvalidGeometryError);
}

TEST(Frustum, ComposeMatchesSingleBody) {
  // A cylinder split at mid-height must compose back to the whole.
  FrustumSegment whole{10.0, 2.0, 2.0, 1.0, 1.0, 8500.0};
  FrustumSegment half{5.0, 2.0, 2.0, 1.0, 1.0, 8500.0};
  RigidBodyProperties w = frustum_mass_properties(whole);
  RigidBodyProperties h = frustum_mass_properties(half);
  RigidBodyProperties c = compose_axisymmetric({h, h}, {0.0, 5.0});
  EXPECT_NEAR(c.mass, w.mass, 1e-6);
  EXPECT_NEAR(c.z_cm, w.z_cm, 1e-12);
  EXPECT_NEAR(c.I_zz, w.I_zz, 1e-6);
  EXPECT_NEAR(c.I_xx, w.I_xx, 1e-4);
}

TEST(SpringConstants, DirectValues) {
  EXPECT_DOUBLE_EQ(bending_spring_constant(2.1e11, 0.5, 5.0), 2.1e10);
  EXPECT_DOUBLE_EQ(bending_spring_constant(1.0, 1.0, 1.0), 1.0);
  // Annular cross-section by hand: I_A = pi/64 (Do^4 - Di^4).
  double d_o = 9.0, t = 0.11;
  double d_i = d_o - 2.0 * t;
  double ia = kPi / 64.0 * (std::pow(d_o, 4) - std::pow(d_i, 4));
  EXPECT_NEAR(bending_spring_constant(2.1e11, ia, 4.0), 2.1e11 * ia / 4.0, 1e-3);
  EXPECT_THROW(bending_spring_constant(1.0, 1.0, 0.0), ConfigError);
  EXPECT_THROW(torsion_spring_constant(1.0, 1.0, 0.0), ConfigError);
  EXPECT_DOUBLE_EQ(torsion_spring_constant(8.08e10, 2.0 * ia, 4.0), 8.08e10 * 2.0 * ia / 4.0);
}

TEST(StationTable, ParseInterpolateAndErrors) {
  auto path = write_temp_csv("owtsim_stations.csv",
                             std::string(kStationHeader) +
                                 "# comment line\n"
                                 "0.0,8.0,0.09,8500,2.1e11,8.08e10\n"
                                 "30.0,8.0,0.09,8500,2.1e11,8.08e10\n"
                                 "100.0,5.5,0.02,8500,2.1e11,8.08e10\n");
  StationTable table = StationTable::from_csv(path.string());
  EXPECT_EQ(table.stations().size(), 3u);
  EXPECT_DOUBLE_EQ(table.bottom(), 0.0);
  EXPECT_DOUBLE_EQ(table.top(), 100.0);
  SectionProperties mid = table.section_at(65.0);
  EXPECT_NEAR(mid.outer_diameter, 6.75, 1e-12);
  EXPECT_NEAR(mid.wall_thickness, 0.055, 1e-12);
  EXPECT_THROW(table.section_at(-1.0), ConfigError);
  EXPECT_THROW(table.section_at(100.1), ConfigError);

  auto bad = write_temp_csv("owtsim_stations_bad.csv",
                            std::string(kStationHeader) + "0,8,0.09,8500,2.1e11,nope\n");
  EXPECT_THROW(StationTable::from_csv(bad.string()), ConfigError);
  auto unsorted = write_temp_csv("owtsim_stations_unsorted.csv",
                                 std::string(kStationHeader) +
                                     "10,8,0.09,8500,2.1e11,8.08e10\n"
                                     "0,8,0.09,8500,2.1e11,8.08e10\n");
  EXPECT_THROW(StationTable::from_csv(unsorted.string()), ConfigError);
}

TEST(StationTable, MassIntegralMatchesDenseSum) {
  std::vector<Station> s = {{0, 8.0, 0.09, 8500, 2.1e11, 8.08e10},
                            {30, 7.0, 0.05, 8000, 2.1e11, 8.08e10},
                            {100, 5.5, 0.02, 7800, 2.1e11, 8.08e10}};
  StationTable table(s);
  // Dense midpoint oracle over rho(z) * A(z).
  auto dense = [&](double lo, double hi) {
    const int n = 200000;
    double sum = 0, dz = (hi - lo) / n;
    for (int i = 0; i < n; ++i) {
      SectionProperties p = table.section_at(lo + (i + 0.5) * dz);
      sum += p.density * p.area() * dz;
    }
    return sum;
  };
  double exact = table.mass_integral(3.0, 77.0);
  EXPECT_NEAR(exact, dense(3.0, 77.0), 1e-7 * exact);
  EXPECT_NEAR(table.mass_integral(0.0, 100.0), dense(0.0, 100.0),
              1e-7 * table.mass_integral(0.0, 100.0));
}

TEST(Discretization, JointPlacementAndSpacing) {
  StationTable table = uniform_table(100.0, 6.0, 0.06);
  auto [bodies, plan] = discretize_structure(table, 10);
  ASSERT_EQ(plan.joint_elevations.size(), 10u);
  ASSERT_EQ(plan.element_boundaries.size(), 11u);
  for (std::size_t e = 0; e < 10; ++e) {
    EXPECT_NEAR(plan.joint_elevations[e],
                0.5 * (plan.element_boundaries[e] + plan.element_boundaries[e + 1]), 1e-12);
  }
  double total = 0;
  for (const auto& j : plan.joints) total += j.spacing;
  EXPECT_NEAR(total, 100.0, 1e-9);
  // Mid-node joints on a uniform mesh give uniform tributary spacing: the end
  // cells pair a half element with the root/top stub.
  for (const auto& j : plan.joints) EXPECT_NEAR(j.spacing, 10.0, 1e-12);
  SectionProperties sec = table.section_at(plan.joint_elevations[4]);
  EXPECT_NEAR(plan.joints[4].bending_k, 2.1e11 * sec.second_moment() / 10.0, 1.0);
}

TEST(Discretization, MassConservedExactly) {
  std::vector<Station> s = {{-40, 8.5, 0.09, 8500, 2.1e11, 8.08e10},
                            {0, 8.5, 0.09, 8500, 2.1e11, 8.08e10},
                            {30, 8.0, 0.036, 8500, 2.1e11, 8.08e10},
                            {115, 5.5, 0.022, 8500, 2.1e11, 8.08e10}};
  StationTable table(s);
  for (int n : {7, 20, 33}) {
    auto [bodies, plan] = discretize_structure(table, n);
    double mass = 0;
    for (const auto& b : bodies) mass += frustum_mass_properties(b.frustum).mass;
    double expected = table.mass_integral(table.bottom(), table.top());
    EXPECT_NEAR(mass, expected, 1e-9 * expected) << "n=" << n;
    EXPECT_EQ(plan.joint_elevations.size(), static_cast<std::size_t>(n));
  }
}

TEST(Discretization, RefinementBreaksLandOnBoundaries) {
  StationTable table = uniform_table(100.0, 6.0, 0.06);
  RefinementPolicy policy;
  policy.break_elevations = {30.0};
  auto [bodies, plan] = discretize_structure(table, 10, policy);
  bool found = false;
  for (double b : plan.element_boundaries) found = found || std::abs(b - 30.0) < 1e-9;
  EXPECT_TRUE(found);
  EXPECT_EQ(plan.element_boundaries.size(), 11u);
  // 3 elements below the break, 7 above, each sub-segment uniform.
  EXPECT_NEAR(plan.element_boundaries[1] - plan.element_boundaries[0], 10.0, 1e-9);
  EXPECT_NEAR(plan.element_boundaries[10] - plan.element_boundaries[9], 10.0, 1e-9);
}

TEST(Discretization, Determinism) {
  StationTable table = uniform_table(80.0, 5.0, 0.05);
  auto [b1, p1] = discretize_structure(table, 17);
  auto [b2, p2] = discretize_structure(table, 17);
  ASSERT_EQ(b1.size(), b2.size());
  for (std::size_t i = 0; i < b1.size(); ++i) {
    EXPECT_EQ(b1[i].base_elevation, b2[i].base_elevation);
    EXPECT_EQ(b1[i].frustum.density, b2[i].frustum.density);
  }
  for (std::size_t j = 0; j < p1.joints.size(); ++j)
    EXPECT_EQ(p1.joints[j].bending_k, p2.joints[j].bending_k);
}
