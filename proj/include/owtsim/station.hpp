#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "owtsim/common.hpp"
#include "owtsim/csv.hpp"

namespace owtsim {

// One row of the tower/monopile definition. Elevations are measured from the
// mudline (negative below it).
struct Station {
  double elevation = 0;       // m
  double outer_diameter = 0;  // m
  double wall_thickness = 0;  // m
  double density = 0;         // kg/m^3
  double youngs_modulus = 0;  // Pa
  double shear_modulus = 0;   // Pa
};

// Cross-section and material values at one elevation, linearly interpolated
// between stations.
struct SectionProperties {
  double outer_diameter = 0;
  double wall_thickness = 0;
  double density = 0;
  double youngs_modulus = 0;
  double shear_modulus = 0;

  double outer_radius() const { return 0.5 * outer_diameter; }
  double inner_radius() const { return 0.5 * outer_diameter - wall_thickness; }
  double area() const {
    double ro = outer_radius(), ri = inner_radius();
    return kPi * (ro * ro - ri * ri);
  }
  // Second moment of area of the annulus (either bending axis).
  double second_moment() const {
    double ro = outer_radius(), ri = inner_radius();
    return 0.25 * kPi * (ro * ro * ro * ro - ri * ri * ri * ri);
  }
  // Polar moment; twice the bending value for a circular annulus.
  double polar_moment() const { return 2.0 * second_moment(); }
  double mass_per_length() const { return density * area(); }
  double bending_rigidity() const { return youngs_modulus * second_moment(); }
  double torsion_rigidity() const { return shear_modulus * polar_moment(); }
};

class StationTable {
 public:
  StationTable() = default;

  explicit StationTable(std::vector<Station> stations) : stations_(std::move(stations)) {
    validate();
  }

  static StationTable from_csv(const std::string& path) {
    CsvTable csv = read_csv(path);
    const char* cols[] = {"elevation_m",  "outer_diameter_m", "wall_thickness_m",
                          "density_kgm3", "E_Pa",             "G_Pa"};
    int idx[6];
    for (int i = 0; i < 6; ++i) {
      idx[i] = csv.column(cols[i]);
      if (idx[i] < 0) throw ConfigError(path + ": missing column '" + std::string(cols[i]) + "'");
    }
    std::vector<Station> stations;
    stations.reserve(csv.rows.size());
    for (const auto& r : csv.rows) {
      stations.push_back({r[idx[0]], r[idx[1]], r[idx[2]], r[idx[3]], r[idx[4]], r[idx[5]]});
    }
    return StationTable(std::move(stations));
  }

  const std::vector<Station>& stations() const { return stations_; }
  double bottom() const { return stations_.front().elevation; }
  double top() const { return stations_.back().elevation; }
  double length() const { return top() - bottom(); }

  bool contains(double z, double tol = 1e-9) const {
    return z >= bottom() - tol && z <= top() + tol;
  }

  SectionProperties section_at(double z) const {
    if (!contains(z))
      throw ConfigError("elevation " + format_double(z) + " outside station range [" +
                        format_double(bottom()) + ", " + format_double(top()) + "]");
    z = std::clamp(z, bottom(), top());
    auto hi = std::upper_bound(stations_.begin(), stations_.end(), z,
                               [](double v, const Station& s) { return v < s.elevation; });
    if (hi == stations_.begin()) ++hi;
    if (hi == stations_.end()) --hi;
    const Station& b = *(hi - 1);
    const Station& t = *hi;
    double w = (z - b.elevation) / (t.elevation - b.elevation);
    auto lerp = [w](double a, double c) { return a + w * (c - a); };
    SectionProperties p;
    p.outer_diameter = lerp(b.outer_diameter, t.outer_diameter);
    p.wall_thickness = lerp(b.wall_thickness, t.wall_thickness);
    p.density = lerp(b.density, t.density);
    p.youngs_modulus = lerp(b.youngs_modulus, t.youngs_modulus);
    p.shear_modulus = lerp(b.shear_modulus, t.shear_modulus);
    return p;
  }

  // Integral of rho(z)*A(z) over [z_lo, z_hi]. The integrand is cubic on each
  // inter-station interval (linear diameter/thickness/density), so Simpson per
  // interval is exact.
  double mass_integral(double z_lo, double z_hi) const {
    if (z_hi < z_lo) std::swap(z_lo, z_hi);
    if (!contains(z_lo) || !contains(z_hi))
      throw ConfigError("mass integral range outside station table");
    std::vector<double> breaks{z_lo};
    for (const auto& s : stations_)
      if (s.elevation > z_lo && s.elevation < z_hi) breaks.push_back(s.elevation);
    breaks.push_back(z_hi);
    double total = 0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
      double a = breaks[i], b = breaks[i + 1], m = 0.5 * (a + b);
      auto f = [this](double z) {
        SectionProperties p = section_at(z);
        return p.mass_per_length();
      };
      total += (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
    }
    return total;
  }

  // Restriction of the table to [z_lo, z_hi], inserting interpolated end
  // stations when the cut falls between rows.
  StationTable slice(double z_lo, double z_hi) const {
    if (z_hi <= z_lo) throw ConfigError("empty station slice");
    std::vector<Station> out;
    auto push = [&out, this](double z) {
      SectionProperties p = section_at(z);
      out.push_back({z, p.outer_diameter, p.wall_thickness, p.density, p.youngs_modulus,
                     p.shear_modulus});
    };
    push(z_lo);
    for (const auto& s : stations_)
      if (s.elevation > z_lo + 1e-12 && s.elevation < z_hi - 1e-12) out.push_back(s);
    push(z_hi);
    return StationTable(std::move(out));
  }

 private:
  void validate() const {
    if (stations_.size() < 2) throw ConfigError("station table needs at least 2 stations");
    for (std::size_t i = 0; i < stations_.size(); ++i) {
      const Station& s = stations_[i];
      if (i > 0 && s.elevation <= stations_[i - 1].elevation)
        throw ConfigError("station elevations must be strictly increasing");
      if (s.wall_thickness <= 0 || s.outer_diameter <= 2.0 * s.wall_thickness)
        throw ConfigError("station at z=" + format_double(s.elevation) +
                          ": need outer_diameter > 2*wall_thickness > 0");
      if (s.density <= 0 || s.youngs_modulus <= 0 || s.shear_modulus <= 0)
        throw ConfigError("station at z=" + format_double(s.elevation) +
                          ": material properties must be positive");
    }
  }

  std::vector<Station> stations_;
};

}  // namespace owtsim
