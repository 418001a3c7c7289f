#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "owtsim/common.hpp"

namespace owtsim {

// ---------------------------------------------------------------------------
// Flat INI-style configuration: [section] headers, key = value lines, #/;
// comments (full-line, or trailing when preceded by whitespace). Duplicate
// keys are allowed; the last assignment wins, which is how --set overrides
// are layered on top of the file.

struct IniEntry {
  std::string section;
  std::string key;
  std::string value;
  int line = 0;
};

class IniFile {
 public:
  static IniFile parse_string(const std::string& text, const std::string& name) {
    IniFile ini;
    ini.name_ = name;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string t = strip_comment(line);
      t = trim(t);
      if (t.empty()) continue;
      if (t.front() == '[') {
        if (t.back() != ']')
          throw ConfigError(name + ":" + std::to_string(lineno) + ": unterminated section header");
        section = trim(t.substr(1, t.size() - 2));
        if (section.empty())
          throw ConfigError(name + ":" + std::to_string(lineno) + ": empty section name");
        continue;
      }
      auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ConfigError(name + ":" + std::to_string(lineno) + ": expected key = value, got '" +
                          t + "'");
      std::string key = trim(t.substr(0, eq));
      std::string value = trim(t.substr(eq + 1));
      if (key.empty())
        throw ConfigError(name + ":" + std::to_string(lineno) + ": empty key");
      if (section.empty())
        throw ConfigError(name + ":" + std::to_string(lineno) + ": key '" + key +
                          "' outside any [section]");
      ini.entries_.push_back({section, key, value, lineno});
    }
    return ini;
  }

  static IniFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
  }

  // Accepts "section.key=value"; used for CLI --set overrides.
  void apply_override(const std::string& dotted) {
    auto eq = dotted.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override '" + dotted + "': expected section.key=value");
    std::string path = trim(dotted.substr(0, eq));
    std::string value = trim(dotted.substr(eq + 1));
    auto dot = path.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == path.size())
      throw ConfigError("override '" + dotted + "': expected section.key=value");
    entries_.push_back({path.substr(0, dot), path.substr(dot + 1), value, 0});
  }

  const std::string& name() const { return name_; }
  const std::vector<IniEntry>& entries() const { return entries_; }

  bool has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback = "") const {
    const IniEntry* e = find(section, key);
    return e ? e->value : fallback;
  }

  std::string require_string(const std::string& section, const std::string& key) const {
    const IniEntry* e = find(section, key);
    if (!e || e->value.empty())
      throw ConfigError(name_ + ": missing required key [" + section + "] " + key);
    return e->value;
  }

  double get_double(const std::string& section, const std::string& key, double fallback) const {
    const IniEntry* e = find(section, key);
    return e ? to_double(*e) : fallback;
  }

  int get_int(const std::string& section, const std::string& key, int fallback) const {
    const IniEntry* e = find(section, key);
    if (!e) return fallback;
    double v = to_double(*e);
    int i = static_cast<int>(std::lround(v));
    if (v != static_cast<double>(i)) throw bad_value(*e, "an integer");
    return i;
  }

  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const {
    const IniEntry* e = find(section, key);
    if (!e) return fallback;
    try {
      std::size_t used = 0;
      std::uint64_t v = std::stoull(e->value, &used);
      if (used != e->value.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw bad_value(*e, "an unsigned integer");
    }
  }

  bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
    const IniEntry* e = find(section, key);
    if (!e) return fallback;
    std::string v = e->value;
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw bad_value(*e, "a boolean");
  }

  // Comma-separated doubles; empty value -> empty list.
  std::vector<double> get_double_list(const std::string& section, const std::string& key) const {
    const IniEntry* e = find(section, key);
    std::vector<double> out;
    if (!e || e->value.empty()) return out;
    for (const std::string& item : split(e->value, ',')) {
      IniEntry probe = *e;
      probe.value = trim(item);
      out.push_back(to_double(probe));
    }
    return out;
  }

  // Canonical "section.key=value" dump (sorted, duplicates collapsed to the
  // effective value); the digest is the FNV-1a hash of this text, so it is
  // stable under reordering and reflects applied overrides.
  std::string canonical() const {
    std::vector<std::pair<std::string, std::string>> kv;
    for (const auto& e : entries_) {
      std::string k = e.section + "." + e.key;
      auto it = std::find_if(kv.begin(), kv.end(), [&](const auto& p) { return p.first == k; });
      if (it == kv.end())
        kv.emplace_back(k, e.value);
      else
        it->second = e.value;
    }
    std::sort(kv.begin(), kv.end());
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    return out;
  }

  std::string digest_hex() const { return to_hex(fnv1a(canonical())); }

 private:
  const IniEntry* find(const std::string& section, const std::string& key) const {
    const IniEntry* hit = nullptr;
    for (const auto& e : entries_)
      if (e.section == section && e.key == key) hit = &e;
    return hit;
  }

  ConfigError bad_value(const IniEntry& e, const char* what) const {
    std::string at = name_;
    if (e.line > 0) at += ":" + std::to_string(e.line);
    return ConfigError(at + ": [" + e.section + "] " + e.key + " = '" + e.value + "' is not " +
                       what);
  }

  double to_double(const IniEntry& e) const {
    char* end = nullptr;
    double v = std::strtod(e.value.c_str(), &end);
    if (end == e.value.c_str() || *end != '\0') throw bad_value(e, "a number");
    return v;
  }

  static std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static std::string strip_comment(const std::string& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if ((s[i] == '#' || s[i] == ';') && (i == 0 || s[i - 1] == ' ' || s[i - 1] == '\t'))
        return s.substr(0, i);
    }
    return s;
  }

  static std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
  }

  std::vector<IniEntry> entries_;
  std::string name_;
};

// ---------------------------------------------------------------------------
// Typed run configuration.

enum class LoadCase { lc12, lc21, lc23, lc51, custom };

inline LoadCase load_case_from_string(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  if (s == "LC12") return LoadCase::lc12;
  if (s == "LC21") return LoadCase::lc21;
  if (s == "LC23") return LoadCase::lc23;
  if (s == "LC51") return LoadCase::lc51;
  if (s == "CUSTOM") return LoadCase::custom;
  throw ConfigError("unknown load case '" + s + "' (expected LC12, LC21, LC23, LC51, or custom)");
}

inline const char* load_case_name(LoadCase lc) {
  switch (lc) {
    case LoadCase::lc12: return "LC12";
    case LoadCase::lc21: return "LC21";
    case LoadCase::lc23: return "LC23";
    case LoadCase::lc51: return "LC51";
    default: return "custom";
  }
}

struct RunConfig {
  IniFile ini;  // retained for the digest and for raw access

  // [files]
  std::string station_csv;
  std::string py_csv;        // optional; required by soil-supported variants
  std::string yaw_load_csv;  // optional; synthetic fallback otherwise

  // [structure]
  int n_elements = 16;
  std::vector<double> refine_breaks;
  double mudline_elevation = 0;

  // [rna]
  double rna_mass = 0;
  std::array<double, 3> rna_inertia{0, 0, 0};
  std::array<double, 3> rna_cm_offset{0, 0, 0};
  double rna_attach_elevation = 0;  // 0 + attach_set=false -> station top
  bool rna_attach_set = false;

  // [sea]
  double hs = 0, tp = 5.5, water_depth = 0;
  double rho_w = 1025.0, ca = 1.0, cd = 1.0;
  int n_wave_components = 120;
  double f_min = 0, f_max = 0;
  int strips_per_body = 2;

  // [soil]
  int soil_nodes = 61;
  double beta_s = 0;
  double f_load_hz = 0;

  // [damping] mode:zeta pairs
  std::vector<std::pair<int, double>> damping_targets;

  // [integrator]
  std::string method = "generalized_alpha";
  double dt = 0.025;
  double rho_inf = 0.9;
  int max_newton_iters = 20;
  int max_step_halvings = 8;

  // [output]
  double rate_hz = 20.0;
  std::vector<std::string> channels;

  // [spectral]
  int nperseg = 4096;
  double overlap = 0.5;
  std::string window = "hann";

  // [run]
  std::uint64_t seed = 1;

  // [lc12]
  std::string lc12_method = "equilibrium";  // or time_domain
  double lc12_duration = 600.0;

  // [lc21] / [lc23]
  int n_modes = 8;
  bool fdd = false;
  double fdd_duration = 1200.0;
  double fdd_transient = 50.0;
  double fdd_force_rms = 2e5;

  // [lc51]
  double lc51_duration = 900.0;
  double lc51_transient = 200.0;
  std::pair<double, double> band1{0.2, 0.3};
  std::pair<double, double> band2{1.0, 1.5};
  double mean_force = 1.0e6;
  double amp_3p = 3e4, amp_6p = 1e4, amp_9p = 2e3;
  bool wind_on = true, waves_on = true;
  bool export_eta = false;

  // [custom]
  double custom_duration = 60.0;

  std::string digest() const { return ini.digest_hex(); }
};

namespace detail {

inline std::pair<double, double> parse_band(const IniFile& ini, const std::string& section,
                                            const std::string& key,
                                            std::pair<double, double> fallback) {
  std::string raw = ini.get_string(section, key);
  if (raw.empty()) return fallback;
  auto colon = raw.find(':');
  if (colon == std::string::npos)
    throw ConfigError(ini.name() + ": [" + section + "] " + key + " must look like lo:hi");
  char* end = nullptr;
  double lo = std::strtod(raw.c_str(), &end);
  double hi = std::strtod(raw.c_str() + colon + 1, &end);
  if (!(lo < hi))
    throw ConfigError(ini.name() + ": [" + section + "] " + key + " needs lo < hi, got '" + raw +
                      "'");
  return {lo, hi};
}

inline std::vector<std::pair<int, double>> parse_damping_targets(const IniFile& ini) {
  std::vector<std::pair<int, double>> out;
  std::string raw = ini.get_string("damping", "targets");
  if (raw.empty()) return out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto colon = item.find(':');
    if (colon == std::string::npos)
      throw ConfigError(ini.name() + ": [damping] targets entries must look like mode:zeta");
    int mode = std::stoi(item.substr(0, colon));
    double zeta = std::strtod(item.c_str() + colon + 1, nullptr);
    if (mode < 0 || !(zeta >= 0))
      throw ConfigError(ini.name() + ": [damping] targets: bad entry '" + item + "'");
    out.emplace_back(mode, zeta);
  }
  if (out.size() > 2)
    throw ConfigError(ini.name() + ": [damping] targets supports at most two modes");
  return out;
}

inline void require_file(const std::string& path, const std::string& what) {
  if (!std::filesystem::exists(path))
    throw ConfigError(what + " file does not exist: " + path);
}

// Relative data paths are taken relative to the config file itself, so a run
// does not depend on the current working directory. Digests are unaffected:
// they hash the raw entry text.
inline std::string resolve_relative(const std::string& path, const std::string& ini_name) {
  if (path.empty()) return path;
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  std::filesystem::path base = std::filesystem::path(ini_name).parent_path();
  if (base.empty()) return path;
  return (base / p).lexically_normal().string();
}

}  // namespace detail

inline RunConfig config_from_ini(IniFile ini) {
  RunConfig c;
  c.station_csv = detail::resolve_relative(ini.require_string("files", "station_table"), ini.name());
  c.py_csv = detail::resolve_relative(ini.get_string("files", "py_curves"), ini.name());
  c.yaw_load_csv = detail::resolve_relative(ini.get_string("files", "yaw_loads"), ini.name());
  detail::require_file(c.station_csv, "station table");
  if (!c.py_csv.empty()) detail::require_file(c.py_csv, "p-y curve");
  if (!c.yaw_load_csv.empty()) detail::require_file(c.yaw_load_csv, "yaw load");

  c.n_elements = ini.get_int("structure", "n_elements", c.n_elements);
  c.refine_breaks = ini.get_double_list("structure", "refine_breaks");
  c.mudline_elevation = ini.get_double("structure", "mudline_elevation", 0.0);

  c.rna_mass = ini.get_double("rna", "mass_kg", 0.0);
  auto vec3_of = [&](const char* key, std::array<double, 3> fallback) {
    std::vector<double> v = ini.get_double_list("rna", key);
    if (v.empty()) return fallback;
    if (v.size() != 3)
      throw ConfigError(ini.name() + ": [rna] " + key + " needs three comma-separated values");
    return std::array<double, 3>{v[0], v[1], v[2]};
  };
  c.rna_inertia = vec3_of("inertia_kgm2", c.rna_inertia);
  c.rna_cm_offset = vec3_of("cm_offset_m", c.rna_cm_offset);
  c.rna_attach_set = ini.has("rna", "attach_elevation_m");
  c.rna_attach_elevation = ini.get_double("rna", "attach_elevation_m", 0.0);

  c.hs = ini.get_double("sea", "hs_m", c.hs);
  c.tp = ini.get_double("sea", "tp_s", c.tp);
  c.water_depth = ini.get_double("sea", "water_depth_m", c.water_depth);
  c.rho_w = ini.get_double("sea", "rho_w_kgm3", c.rho_w);
  c.ca = ini.get_double("sea", "ca", c.ca);
  c.cd = ini.get_double("sea", "cd", c.cd);
  c.n_wave_components = ini.get_int("sea", "n_components", c.n_wave_components);
  c.f_min = ini.get_double("sea", "f_min_hz", c.f_min);
  c.f_max = ini.get_double("sea", "f_max_hz", c.f_max);
  c.strips_per_body = ini.get_int("sea", "strips_per_body", c.strips_per_body);

  c.soil_nodes = ini.get_int("soil", "n_nodes", c.soil_nodes);
  c.beta_s = ini.get_double("soil", "beta_s", c.beta_s);
  c.f_load_hz = ini.get_double("soil", "f_load_hz", c.f_load_hz);

  c.damping_targets = detail::parse_damping_targets(ini);

  c.method = ini.get_string("integrator", "method", c.method);
  if (c.method != "generalized_alpha" && c.method != "rk4")
    throw ConfigError(ini.name() + ": [integrator] method must be generalized_alpha or rk4");
  c.dt = ini.get_double("integrator", "dt_s", c.dt);
  c.rho_inf = ini.get_double("integrator", "rho_inf", c.rho_inf);
  c.max_newton_iters = ini.get_int("integrator", "max_newton_iters", c.max_newton_iters);
  c.max_step_halvings = ini.get_int("integrator", "max_step_halvings", c.max_step_halvings);

  c.rate_hz = ini.get_double("output", "rate_hz", c.rate_hz);
  {
    std::string raw = ini.get_string("output", "channels");
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto b = item.find_first_not_of(" \t");
      if (b == std::string::npos) continue;
      auto e = item.find_last_not_of(" \t");
      c.channels.push_back(item.substr(b, e - b + 1));
    }
  }

  c.nperseg = ini.get_int("spectral", "nperseg", c.nperseg);
  c.overlap = ini.get_double("spectral", "overlap", c.overlap);
  c.window = ini.get_string("spectral", "window", c.window);
  if (c.window != "hann" && c.window != "rectangular")
    throw ConfigError(ini.name() + ": [spectral] window must be hann or rectangular");

  c.seed = ini.get_u64("run", "seed", c.seed);

  c.lc12_method = ini.get_string("lc12", "method", c.lc12_method);
  if (c.lc12_method != "equilibrium" && c.lc12_method != "time_domain")
    throw ConfigError(ini.name() + ": [lc12] method must be equilibrium or time_domain");
  c.lc12_duration = ini.get_double("lc12", "duration_s", c.lc12_duration);

  c.n_modes = ini.get_int("lc21", "n_modes", c.n_modes);
  c.n_modes = ini.get_int("lc23", "n_modes", c.n_modes);
  c.fdd = ini.get_bool("lc23", "fdd", c.fdd);
  c.fdd_duration = ini.get_double("lc23", "fdd_duration_s", c.fdd_duration);
  c.fdd_transient = ini.get_double("lc23", "fdd_transient_s", c.fdd_transient);
  c.fdd_force_rms = ini.get_double("lc23", "fdd_force_rms_n", c.fdd_force_rms);

  c.lc51_duration = ini.get_double("lc51", "duration_s", c.lc51_duration);
  c.lc51_transient = ini.get_double("lc51", "transient_s", c.lc51_transient);
  c.band1 = detail::parse_band(ini, "lc51", "band1_hz", c.band1);
  c.band2 = detail::parse_band(ini, "lc51", "band2_hz", c.band2);
  c.mean_force = ini.get_double("lc51", "mean_force_n", c.mean_force);
  c.amp_3p = ini.get_double("lc51", "amp_3p_n", c.amp_3p);
  c.amp_6p = ini.get_double("lc51", "amp_6p_n", c.amp_6p);
  c.amp_9p = ini.get_double("lc51", "amp_9p_n", c.amp_9p);
  c.wind_on = ini.get_bool("lc51", "wind", c.wind_on);
  c.waves_on = ini.get_bool("lc51", "waves", c.waves_on);
  c.export_eta = ini.get_bool("lc51", "export_eta", c.export_eta);

  c.custom_duration = ini.get_double("custom", "duration_s", c.custom_duration);

  if (c.n_elements < 2) throw ConfigError(ini.name() + ": [structure] n_elements must be >= 2");
  if (!(c.dt > 0)) throw ConfigError(ini.name() + ": [integrator] dt_s must be > 0");
  if (!(c.rate_hz > 0)) throw ConfigError(ini.name() + ": [output] rate_hz must be > 0");

  c.ini = std::move(ini);
  return c;
}

inline RunConfig parse_config(const std::string& path,
                              const std::vector<std::string>& overrides = {}) {
  IniFile ini = IniFile::parse_file(path);
  for (const auto& o : overrides) ini.apply_override(o);
  return config_from_ini(std::move(ini));
}

}  // namespace owtsim
