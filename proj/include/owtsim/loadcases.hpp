#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "owtsim/chain.hpp"
#include "owtsim/config.hpp"
#include "owtsim/dynamics.hpp"
#include "owtsim/fdd.hpp"
#include "owtsim/simulate.hpp"
#include "owtsim/spectral.hpp"

namespace owtsim {

// ---------------------------------------------------------------------------
// Model construction from a RunConfig.

struct BuiltSystem {
  RunConfig cfg;
  StationTable table;        // full structure, pile tip to tower top
  StationTable tower_table;  // truncated at the mudline for clamped variants
  PYCurveSet curves;         // empty when no p-y file was configured
};

namespace detail {

// Sub-table from z_lo to the top, with an interpolated station at the cut.
inline StationTable truncate_below(const StationTable& table, double z_lo) {
  if (z_lo <= table.bottom()) return table;
  if (z_lo >= table.top())
    throw ConfigError("mudline elevation " + format_double(z_lo) + " at or above structure top");
  std::vector<Station> kept;
  SectionProperties cut = table.section_at(z_lo);
  kept.push_back({z_lo, cut.outer_diameter, cut.wall_thickness, cut.density, cut.youngs_modulus,
                  cut.shear_modulus});
  for (const auto& s : table.stations())
    if (s.elevation > z_lo + 1e-9) kept.push_back(s);
  return StationTable(std::move(kept));
}

}  // namespace detail

inline BuiltSystem load_system(const RunConfig& cfg) {
  BuiltSystem sys;
  sys.cfg = cfg;
  sys.table = StationTable::from_csv(cfg.station_csv);
  sys.tower_table = detail::truncate_below(sys.table, cfg.mudline_elevation);
  if (!cfg.py_csv.empty()) sys.curves = PYCurveSet::from_csv(cfg.py_csv);
  return sys;
}

inline SeaStateConfig sea_config(const RunConfig& cfg) {
  SeaStateConfig sea;
  sea.hs = cfg.hs;
  sea.tp = cfg.tp;
  sea.water_depth = cfg.water_depth;
  sea.rho_w = cfg.rho_w;
  sea.ca = cfg.ca;
  sea.cd = cfg.cd;
  sea.n_components = cfg.n_wave_components;
  sea.f_min = cfg.f_min;
  sea.f_max = cfg.f_max;
  sea.seed = cfg.seed;
  return sea;
}

// Builds one variant on a shared-density mesh. The clamped variant spans
// mudline to top (element count scaled to keep element length comparable);
// the soil-supported variant spans the whole pile.
inline ChainModel build_variant(const BuiltSystem& sys, bool soil, bool hydro) {
  const RunConfig& cfg = sys.cfg;
  const StationTable& table = soil ? sys.table : sys.tower_table;

  int n = cfg.n_elements;
  if (!soil) {
    double full = sys.table.top() - sys.table.bottom();
    double span = table.top() - table.bottom();
    n = std::max(3, static_cast<int>(std::lround(cfg.n_elements * span / full)));
  }

  RefinementPolicy policy;
  for (double b : cfg.refine_breaks)
    if (b > table.bottom() + 1e-9 && b < table.top() - 1e-9) policy.break_elevations.push_back(b);
  if (soil && cfg.mudline_elevation > table.bottom() + 1e-9)
    policy.break_elevations.push_back(cfg.mudline_elevation);

  auto [bodies, plan] = discretize_structure(table, n, policy);

  std::vector<RnaProperties> attachments;
  if (cfg.rna_mass > 0) {
    RnaProperties rna;
    rna.mass = cfg.rna_mass;
    rna.inertia_diag = Vec3(cfg.rna_inertia[0], cfg.rna_inertia[1], cfg.rna_inertia[2]);
    rna.cm_offset = Vec3(cfg.rna_cm_offset[0], cfg.rna_cm_offset[1], cfg.rna_cm_offset[2]);
    rna.attach_elevation = cfg.rna_attach_set ? cfg.rna_attach_elevation : table.top();
    attachments.push_back(rna);
  }

  ModelBindings bindings;
  bindings.mudline_elevation = cfg.mudline_elevation;
  if (soil) {
    if (sys.curves.empty())
      throw ConfigError("soil-supported variant requires [files] py_curves");
    SoilProfile profile;
    profile.curves = sys.curves;
    profile.n_nodes = cfg.soil_nodes;
    profile.beta_s = cfg.beta_s;
    profile.f_load = cfg.f_load_hz;
    bindings.soil = profile;
  }
  if (hydro) {
    if (!(cfg.water_depth > 0))
      throw ConfigError("hydrodynamic variant requires [sea] water_depth_m > 0");
    HydroProfile hp;
    hp.sea = sea_config(cfg);
    hp.strips_per_body = cfg.strips_per_body;
    bindings.hydro = hp;
  }

  return assemble_chain(bodies, plan, attachments, bindings,
                        soil ? RootCondition::soil_supported : RootCondition::clamped);
}

inline EnvironmentLoads gravity_env(bool soil_active) {
  EnvironmentLoads env;
  env.soil_active = soil_active;
  return env;
}

// Calibrates joint dampers against the configured modal targets about q_ref.
// No targets -> the model is returned untouched.
inline ChainModel apply_damping(const ChainModel& model, const RunConfig& cfg,
                                const EnvironmentLoads& env, const VecX& q_ref,
                                std::vector<std::string>& warnings) {
  if (cfg.damping_targets.empty()) return model;
  std::vector<DampingTarget> targets;
  for (const auto& [mode, zeta] : cfg.damping_targets) targets.push_back({mode, zeta});
  CalibrationResult cal = calibrate_joint_damping(model, targets, env, q_ref);
  for (std::size_t i = 0; i < targets.size(); ++i)
    if (std::abs(cal.achieved[i] - targets[i].zeta) > 0.02 * std::max(targets[i].zeta, 1e-6))
      warnings.push_back("damping target mode " + std::to_string(targets[i].mode) +
                         ": achieved zeta " + format_double(cal.achieved[i]));
  return model.with_joint_dampers(cal.dampers);
}

// ---------------------------------------------------------------------------
// Load construction.

// Mean rotor thrust plus blade-passing sinusoids (3P/6P/9P) applied at the
// yaw bearing; phases are drawn from the run seed.
inline LoadSeries synthetic_wind_loads(const RunConfig& cfg, double t_end) {
  const double f3p = 0.388, f6p = 0.775, f9p = 1.163;
  std::mt19937_64 rng(cfg.seed + 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  const double p3 = phase(rng), p6 = phase(rng), p9 = phase(rng);

  const double dt = cfg.dt;
  const int n = static_cast<int>(std::ceil((t_end + 4.0 * dt) / dt)) + 2;
  std::vector<double> t(n);
  std::vector<Vec3> force(n), moment(n, Vec3::Zero());
  for (int i = 0; i < n; ++i) {
    double ti = -2.0 * dt + i * dt;
    t[i] = ti;
    double fx = cfg.mean_force + cfg.amp_3p * std::sin(2.0 * kPi * f3p * ti + p3) +
                cfg.amp_6p * std::sin(2.0 * kPi * f6p * ti + p6) +
                cfg.amp_9p * std::sin(2.0 * kPi * f9p * ti + p9);
    force[i] = Vec3(fx, 0, 0);
  }
  return LoadSeries(std::move(t), std::move(force), std::move(moment));
}

// Band-limited white-noise fore-aft force at the yaw bearing for FDD runs.
// Fore-aft only: the identification bands target the fore-aft family, and
// exciting the near-coincident side-side twins would contaminate them.
inline LoadSeries white_noise_loads(double rms, double t_end, double dt, std::uint64_t seed) {
  std::mt19937_64 rng(seed + 0x6a09e667f3bcc909ull);
  std::normal_distribution<double> dist(0.0, rms);
  const int n = static_cast<int>(std::ceil((t_end + 4.0 * dt) / dt)) + 2;
  std::vector<double> t(n);
  std::vector<Vec3> force(n), moment(n, Vec3::Zero());
  for (int i = 0; i < n; ++i) {
    t[i] = -2.0 * dt + i * dt;
    force[i] = Vec3(dist(rng), 0, 0);
  }
  return LoadSeries(std::move(t), std::move(force), std::move(moment));
}

// ---------------------------------------------------------------------------
// Run summary and output plumbing.

struct RunSummary {
  std::string case_id;
  std::string digest;
  double wall_time_s = 0;
  std::vector<std::string> warnings;
  std::vector<std::string> files;  // artifacts written, relative to out dir
  nlohmann::json results;
};

namespace detail {

inline std::string digest_comment(const RunConfig& cfg, const std::string& case_id) {
  return "owtsim " + case_id + " config digest " + cfg.digest();
}

class WallTimer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(clock::now() - start_).count();
  }

 private:
  using clock = std::chrono::steady_clock;
  clock::time_point start_ = clock::now();
};

inline std::string join_path(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

// Output-node displacement profile of a static solution.
inline void write_static_profile(const std::string& path, const ChainModel& model, const VecX& q,
                                 const std::vector<std::string>& comments) {
  Kinematics kin = compute_kinematics(model, q, VecX::Zero(model.ndof()));
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < model.nodes.size(); ++i) {
    const OutputNode& node = model.nodes[i];
    Vec3 pos = point_position(kin, node.link, node.offset);
    rows.push_back({static_cast<double>(i), node.elevation, pos.x(), pos.y()});
  }
  write_csv(path, comments, {"node", "elevation_m", "ux_m", "uy_m"}, rows);
}

inline double shape_component(const Mode& mode, std::size_t node) {
  switch (mode.cls) {
    case ModeClass::fore_aft: return mode.node_disp[node].x();
    case ModeClass::side_side: return mode.node_disp[node].y();
    default: return mode.node_twist[node];
  }
}

inline void write_modes_csv(const std::string& path, const ChainModel& model,
                            const std::vector<Mode>& modes,
                            const std::vector<std::string>& comments) {
  std::vector<std::vector<double>> rows;
  for (std::size_t m = 0; m < modes.size(); ++m)
    for (std::size_t i = 0; i < model.nodes.size(); ++i)
      rows.push_back({static_cast<double>(m), modes[m].frequency_hz, static_cast<double>(i),
                      shape_component(modes[m], i)});
  write_csv(path, comments, {"mode", "f_Hz", "node", "shape_component"}, rows);
}

inline void write_psd_csv(const std::string& path, const PsdEstimate& est,
                          const std::vector<std::string>& comments) {
  std::vector<std::vector<double>> rows;
  for (Eigen::Index k = 0; k < est.psd.size(); ++k)
    rows.push_back({est.frequency_hz[k], est.psd[k]});
  write_csv(path, comments, {"f_Hz", "psd"}, rows);
}

inline SpectralConfig spectral_config(const RunConfig& cfg, int available_samples,
                                      std::vector<std::string>& warnings) {
  SpectralConfig sc;
  sc.sample_rate_hz = cfg.rate_hz;
  sc.nperseg = cfg.nperseg;
  sc.overlap = cfg.overlap;
  sc.window = cfg.window == "hann" ? SpectralWindow::hann : SpectralWindow::rectangular;
  while (sc.nperseg > 256 && available_samples < 4 * sc.nperseg) sc.nperseg /= 2;
  if (sc.nperseg != cfg.nperseg)
    warnings.push_back("record too short for nperseg " + std::to_string(cfg.nperseg) +
                       "; using " + std::to_string(sc.nperseg));
  sc.validate();
  return sc;
}

inline int output_stride(const RunConfig& cfg) {
  double stride = 1.0 / (cfg.rate_hz * cfg.dt);
  int s = static_cast<int>(std::lround(stride));
  if (s < 1 || std::abs(stride - s) > 1e-9)
    throw ConfigError("[output] rate_hz " + format_double(cfg.rate_hz) +
                      " is not an integer stride of dt " + format_double(cfg.dt));
  return s;
}

inline SimulateOptions simulate_options(const RunConfig& cfg, double t_end) {
  SimulateOptions opt;
  opt.t_end = t_end;
  opt.dt = cfg.dt;
  opt.output_stride = output_stride(cfg);
  opt.integrator.method =
      cfg.method == "rk4" ? Integrator::rk4 : Integrator::generalized_alpha;
  opt.integrator.rho_inf = cfg.rho_inf;
  opt.integrator.max_newton_iters = cfg.max_newton_iters;
  opt.integrator.max_step_halvings = cfg.max_step_halvings;
  return opt;
}

}  // namespace detail

// Atomic write of summary.json into the output directory.
inline void emit_summary(const RunSummary& summary, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  // Wall time is deliberately left out: rerunning with the same config and
  // seed must reproduce every output file byte for byte.
  nlohmann::json j;
  j["case"] = summary.case_id;
  j["digest"] = summary.digest;
  j["warnings"] = summary.warnings;
  j["files"] = summary.files;
  j["results"] = summary.results;
  fs::path target = fs::path(out_dir) / "summary.json";
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << j.dump(2) << "\n";
  }
  fs::rename(tmp, target);
}

// ---------------------------------------------------------------------------
// LC 1.2: gravity-only statics, clamped vs soil-supported.

inline RunSummary run_lc_static(const BuiltSystem& sys, const std::string& out_dir) {
  const RunConfig& cfg = sys.cfg;
  detail::WallTimer timer;
  RunSummary summary;
  summary.case_id = "LC12";
  summary.digest = cfg.digest();
  const std::vector<std::string> comments = {detail::digest_comment(cfg, summary.case_id)};

  ChainModel clamped = build_variant(sys, false, false);
  ChainModel flexible = build_variant(sys, true, false);

  auto tip_ux = [&](const ChainModel& model, const VecX& q) {
    Kinematics kin = compute_kinematics(model, q, VecX::Zero(model.ndof()));
    return point_position(kin, model.yaw_link, model.yaw_offset).x();
  };

  double ux_c = 0, ux_f = 0;
  if (cfg.lc12_method == "equilibrium") {
    VecX q_c = static_equilibrium(clamped, gravity_env(false));
    VecX q_f = static_equilibrium(flexible, gravity_env(true));
    ux_c = tip_ux(clamped, q_c);
    ux_f = tip_ux(flexible, q_f);
    detail::write_static_profile(detail::join_path(out_dir, "static_clamped.csv"), clamped, q_c,
                                 comments);
    detail::write_static_profile(detail::join_path(out_dir, "static_flexible.csv"), flexible, q_f,
                                 comments);
  } else {
    // The benchmark's own method: damped time-domain run to steady state.
    auto settle = [&](const ChainModel& model, bool soil) {
      EnvironmentLoads env = gravity_env(soil);
      VecX q0 = static_equilibrium(model, env);
      ChainModel damped = apply_damping(model, cfg, env, q0, summary.warnings);
      if (cfg.damping_targets.empty())
        summary.warnings.push_back("time_domain statics without [damping] targets is undamped");
      SimulateOptions opt = detail::simulate_options(cfg, cfg.lc12_duration);
      std::vector<ChannelRequest> chans = {channel_from_string(damped, "joint0.thy")};
      VecX q_last;
      opt.state_observer = [&](const SystemState& st, const VecX&) { q_last = st.q; };
      SimulationResult res = simulate(damped, env, opt, chans);
      summary.warnings.insert(summary.warnings.end(), res.warnings.begin(), res.warnings.end());
      return tip_ux(model, q_last);
    };
    ux_c = settle(clamped, false);
    ux_f = settle(flexible, true);
  }

  summary.files = {"static_clamped.csv", "static_flexible.csv", "summary.json"};
  if (cfg.lc12_method != "equilibrium") summary.files = {"summary.json"};
  summary.results["tower_top_ux_clamped_m"] = ux_c;
  summary.results["tower_top_ux_flexible_m"] = ux_f;
  if (std::abs(ux_c) > 1e-12) {
    summary.results["deflection_ratio"] = std::abs(ux_f) / std::abs(ux_c);
  } else {
    summary.results["deflection_ratio"] = nullptr;
    summary.warnings.push_back("clamped deflection is ~0; ratio undefined");
  }
  emit_summary(summary, out_dir);
  summary.wall_time_s = timer.seconds();
  return summary;
}

// ---------------------------------------------------------------------------
// LC 2.1 / LC 2.3: eigenanalysis (dry clamped / wet soil-supported), with an
// optional white-noise FDD cross-check for the wet variant.

enum class EigenVariant { clamped_dry, soil_wet };

inline EigenVariant eigen_variant_from_string(const std::string& s) {
  if (s == "clamped_dry") return EigenVariant::clamped_dry;
  if (s == "soil_wet") return EigenVariant::soil_wet;
  throw ConfigError("unknown variant '" + s + "' (expected clamped_dry or soil_wet)");
}

namespace detail {

inline void run_fdd_check(const BuiltSystem& sys, const ChainModel& model,
                          const ModalResult& mr, const VecX& q_star, const std::string& out_dir,
                          RunSummary& summary) {
  const RunConfig& cfg = sys.cfg;
  EnvironmentLoads env = gravity_env(true);
  SeaStateConfig still = sea_config(cfg);
  still.hs = 0;  // still water: drag and added mass, no wave excitation
  env.sea = WaveEnvironment::synthesize(still);
  env.yaw_loads = white_noise_loads(cfg.fdd_force_rms, cfg.fdd_duration, 1.0 / cfg.rate_hz,
                                    cfg.seed);

  ChainModel damped = apply_damping(model, cfg, env, q_star, summary.warnings);

  // 13 measurement elevations, equally spaced mudline to yaw bearing, mapped
  // to the nearest output nodes.
  std::vector<int> node_ids;
  for (int i = 0; i < 13; ++i) {
    double z = cfg.mudline_elevation +
               i * (model.yaw_elevation - cfg.mudline_elevation) / 12.0;
    int best = 0;
    for (std::size_t k = 1; k < model.nodes.size(); ++k)
      if (std::abs(model.nodes[k].elevation - z) < std::abs(model.nodes[best].elevation - z))
        best = static_cast<int>(k);
    if (node_ids.empty() || node_ids.back() != best) node_ids.push_back(best);
  }
  std::vector<ChannelRequest> chans;
  for (int id : node_ids)
    chans.push_back(channel_from_string(damped, "node" + std::to_string(id) + ".ax"));

  SimulateOptions opt = simulate_options(cfg, cfg.fdd_duration);
  opt.initial_state = SystemState{q_star, VecX::Zero(model.ndof())};
  SimulationResult res = simulate(damped, env, opt, chans);
  summary.warnings.insert(summary.warnings.end(), res.warnings.begin(), res.warnings.end());

  int skip = static_cast<int>(std::lround(cfg.fdd_transient * cfg.rate_hz));
  if (res.frame.n_samples() - skip < 512)
    throw ConfigError("FDD record too short after transient removal");
  std::vector<VecX> records;
  for (const auto& name : res.frame.names)
    records.push_back(res.frame.column(name).tail(res.frame.n_samples() - skip));

  SpectralConfig sc = spectral_config(cfg, static_cast<int>(records[0].size()),
                                      summary.warnings);
  CsdMatrix csd = welch_csd_matrix(records, sc);

  // Band around the first linearized fore-aft frequency. Higher modes are
  // left out on purpose: under broadband yaw forcing the acceleration
  // channels carry a coherent quasi-static feedthrough floor that grows like
  // f^4 and swamps the strongly damped higher resonances.
  std::vector<std::pair<double, double>> bands;
  for (const auto& mode : mr.modes) {
    if (mode.cls != ModeClass::fore_aft) continue;
    double f = mode.frequency_hz;
    if (f > 0.4 * cfg.rate_hz || bands.size() >= 1) break;
    bands.push_back({std::max(0.8 * f, 2.0 * sc.df()), 1.2 * f});
  }
  if (bands.empty()) {
    summary.warnings.push_back("no fore-aft mode inside the FDD band; skipping FDD");
    return;
  }
  FddResult fdd = fdd_identify(csd, bands);

  std::vector<std::vector<double>> rows;
  nlohmann::json jmodes = nlohmann::json::array();
  for (std::size_t m = 0; m < fdd.modes.size(); ++m) {
    const FddMode& fm = fdd.modes[m];
    for (std::size_t i = 0; i < node_ids.size(); ++i)
      rows.push_back({static_cast<double>(m), fm.frequency_hz, static_cast<double>(node_ids[i]),
                      fm.shape[i].real()});
    // MAC against the linearized fore-aft shape sampled at the same nodes.
    const Mode* lin = nullptr;
    int count = 0;
    for (const auto& mode : mr.modes) {
      if (mode.cls != ModeClass::fore_aft) continue;
      if (count++ == static_cast<int>(m)) {
        lin = &mode;
        break;
      }
    }
    nlohmann::json entry;
    entry["f_Hz"] = fm.frequency_hz;
    entry["band_lo_Hz"] = bands[m].first;
    entry["band_hi_Hz"] = bands[m].second;
    if (lin) {
      VecX shape(node_ids.size());
      for (std::size_t i = 0; i < node_ids.size(); ++i)
        shape[i] = lin->node_disp[node_ids[i]].x();
      entry["f_linear_Hz"] = lin->frequency_hz;
      entry["mac_vs_linear"] = mac(fm.shape, shape.cast<std::complex<double>>().eval());
    }
    jmodes.push_back(entry);
  }
  write_csv(join_path(out_dir, "fdd_modes.csv"),
            {digest_comment(cfg, summary.case_id)},
            {"mode", "f_Hz", "node", "shape_component"}, rows);
  summary.files.push_back("fdd_modes.csv");
  summary.results["fdd"] = jmodes;
}

}  // namespace detail

inline RunSummary run_lc_eigen(const BuiltSystem& sys, EigenVariant variant,
                               const std::string& out_dir) {
  const RunConfig& cfg = sys.cfg;
  detail::WallTimer timer;
  RunSummary summary;
  summary.case_id = variant == EigenVariant::clamped_dry ? "LC21" : "LC23";
  summary.digest = cfg.digest();
  const std::vector<std::string> comments = {detail::digest_comment(cfg, summary.case_id)};

  const bool wet = variant == EigenVariant::soil_wet;
  ChainModel model = build_variant(sys, wet, wet);

  // Dry benchmark: direct eigenanalysis about the reference configuration.
  // Wet: linearization about the gravity equilibrium so the soil springs
  // contribute their deflection-consistent secant stiffness.
  EnvironmentLoads env = gravity_env(wet);
  VecX q_star = wet ? static_equilibrium(model, env) : VecX::Zero(model.ndof());
  ModalResult mr = modal_analysis(model, q_star, env);
  if (static_cast<int>(mr.modes.size()) > cfg.n_modes) mr.modes.resize(cfg.n_modes);

  // Modal damping ratios from the complex eigenanalysis when dampers are
  // configured.
  if (!cfg.damping_targets.empty()) {
    ChainModel damped = apply_damping(model, cfg, env, q_star, summary.warnings);
    LinearizedSystem lin = linearize(damped, q_star, env);
    std::vector<DampedMode> dm = damped_modes(lin.M, lin.C, lin.K);
    for (auto& mode : mr.modes) {
      const DampedMode* best = nullptr;
      for (const auto& d : dm)
        if (!best || std::abs(d.frequency_hz - mode.frequency_hz) <
                         std::abs(best->frequency_hz - mode.frequency_hz))
          best = &d;
      if (best) mode.damping_ratio = best->zeta;
    }
  }

  std::string csv = variant == EigenVariant::clamped_dry ? "modes_clamped_dry.csv"
                                                         : "modes_soil_wet.csv";
  detail::write_modes_csv(detail::join_path(out_dir, csv), model, mr.modes, comments);
  summary.files = {csv, "summary.json"};

  nlohmann::json table = nlohmann::json::array();
  for (std::size_t m = 0; m < mr.modes.size(); ++m) {
    nlohmann::json entry;
    entry["mode"] = m;
    entry["f_Hz"] = mr.modes[m].frequency_hz;
    entry["class"] = mode_class_name(mr.modes[m].cls);
    entry["zeta"] = mr.modes[m].damping_ratio;
    table.push_back(entry);
  }
  summary.results["modes"] = table;

  if (wet && cfg.fdd) detail::run_fdd_check(sys, model, mr, q_star, out_dir, summary);

  emit_summary(summary, out_dir);
  summary.wall_time_s = timer.seconds();
  return summary;
}

// ---------------------------------------------------------------------------
// LC 5.1: wind + wave time domain, seabed fore-aft moment PSD and band sums.

inline RunSummary run_lc_windwave(const BuiltSystem& sys, const std::string& out_dir) {
  const RunConfig& cfg = sys.cfg;
  detail::WallTimer timer;
  RunSummary summary;
  summary.case_id = "LC51";
  summary.digest = cfg.digest();
  const std::vector<std::string> comments = {detail::digest_comment(cfg, summary.case_id)};

  ChainModel model = build_variant(sys, true, true);
  EnvironmentLoads env = gravity_env(true);
  if (cfg.waves_on && cfg.hs > 0) env.sea = WaveEnvironment::synthesize(sea_config(cfg));
  if (!cfg.yaw_load_csv.empty())
    env.yaw_loads = LoadSeries::from_csv(cfg.yaw_load_csv);
  else if (cfg.wind_on)
    env.yaw_loads = synthetic_wind_loads(cfg, cfg.lc51_duration);

  // Start from the gravity equilibrium so the transient carries only the
  // environmental loads.
  VecX q0 = static_equilibrium(model, gravity_env(true));
  ChainModel damped = apply_damping(model, cfg, gravity_env(true), q0, summary.warnings);

  std::string moment_name = "moment." + format_double(cfg.mudline_elevation) + "m.y";
  std::vector<ChannelRequest> chans = {channel_from_string(damped, moment_name)};
  for (const auto& extra : cfg.channels) chans.push_back(channel_from_string(damped, extra));

  SimulateOptions opt = detail::simulate_options(cfg, cfg.lc51_duration);
  opt.initial_state = SystemState{q0, VecX::Zero(model.ndof())};
  SimulationResult res = simulate(damped, env, opt, chans);
  summary.warnings.insert(summary.warnings.end(), res.warnings.begin(), res.warnings.end());

  res.frame.to_csv(detail::join_path(out_dir, "lc51_series.csv"), comments);
  summary.files = {"lc51_series.csv", "lc51_psd.csv", "summary.json"};

  int skip = static_cast<int>(std::lround(cfg.lc51_transient * cfg.rate_hz));
  VecX series = res.frame.column(moment_name);
  if (series.size() - skip < 512)
    throw ConfigError("LC51 record too short after transient removal; increase duration_s");
  VecX trimmed = series.tail(series.size() - skip);

  SpectralConfig sc = detail::spectral_config(cfg, static_cast<int>(trimmed.size()),
                                              summary.warnings);
  PsdEstimate est = welch_psd(trimmed, sc);
  detail::write_psd_csv(detail::join_path(out_dir, "lc51_psd.csv"), est, comments);

  double mean = trimmed.mean();
  summary.results["moment_channel"] = moment_name;
  summary.results["mean_moment_Nm"] = mean;
  summary.results["psd_0hz"] = est.psd[0];  // static content reported on its own
  summary.results["variance_Nm2"] =
      (trimmed.array() - mean).matrix().squaredNorm() / static_cast<double>(trimmed.size());
  summary.results["band1_lo_Hz"] = cfg.band1.first;
  summary.results["band1_hi_Hz"] = cfg.band1.second;
  summary.results["band1_sum_Nm2"] =
      band_psd_sum(est.frequency_hz, est.psd, cfg.band1.first, cfg.band1.second);
  summary.results["band2_lo_Hz"] = cfg.band2.first;
  summary.results["band2_hi_Hz"] = cfg.band2.second;
  summary.results["band2_sum_Nm2"] =
      band_psd_sum(est.frequency_hz, est.psd, cfg.band2.first, cfg.band2.second);

  if (cfg.export_eta && env.sea) {
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < res.frame.n_samples(); ++i) {
      double t = res.frame.time_at(i);
      rows.push_back({t, env.sea->waves.surface_elevation(0.0, t)});
    }
    write_csv(detail::join_path(out_dir, "lc51_eta.csv"), comments, {"t_s", "eta_m"}, rows);
    summary.files.push_back("lc51_eta.csv");
  }

  emit_summary(summary, out_dir);
  summary.wall_time_s = timer.seconds();
  return summary;
}

// ---------------------------------------------------------------------------
// Custom case: simulate the configured channels under the configured
// environment and report basic statistics.

inline RunSummary run_custom(const BuiltSystem& sys, const std::string& out_dir) {
  const RunConfig& cfg = sys.cfg;
  detail::WallTimer timer;
  RunSummary summary;
  summary.case_id = "custom";
  summary.digest = cfg.digest();
  if (cfg.channels.empty())
    throw ConfigError("custom case requires [output] channels");

  const bool soil = !cfg.py_csv.empty();
  const bool hydro = cfg.waves_on && cfg.water_depth > 0;
  ChainModel model = build_variant(sys, soil, hydro);
  EnvironmentLoads env = gravity_env(soil);
  if (hydro && cfg.hs > 0) env.sea = WaveEnvironment::synthesize(sea_config(cfg));
  if (!cfg.yaw_load_csv.empty()) env.yaw_loads = LoadSeries::from_csv(cfg.yaw_load_csv);

  VecX q0 = static_equilibrium(model, gravity_env(soil));
  ChainModel damped = apply_damping(model, cfg, gravity_env(soil), q0, summary.warnings);

  std::vector<ChannelRequest> chans;
  for (const auto& c : cfg.channels) chans.push_back(channel_from_string(damped, c));
  SimulateOptions opt = detail::simulate_options(cfg, cfg.custom_duration);
  opt.initial_state = SystemState{q0, VecX::Zero(model.ndof())};
  SimulationResult res = simulate(damped, env, opt, chans);
  summary.warnings.insert(summary.warnings.end(), res.warnings.begin(), res.warnings.end());

  res.frame.to_csv(detail::join_path(out_dir, "series.csv"),
                   {detail::digest_comment(cfg, summary.case_id)});
  summary.files = {"series.csv", "summary.json"};
  nlohmann::json stats = nlohmann::json::object();
  for (const auto& name : res.frame.names) {
    VecX col = res.frame.column(name);
    nlohmann::json s;
    s["mean"] = col.mean();
    s["rms"] = std::sqrt(col.squaredNorm() / static_cast<double>(col.size()));
    s["min"] = col.minCoeff();
    s["max"] = col.maxCoeff();
    stats[name] = s;
  }
  summary.results["channels"] = stats;
  emit_summary(summary, out_dir);
  summary.wall_time_s = timer.seconds();
  return summary;
}

inline RunSummary run_case(const RunConfig& cfg, LoadCase lc, const std::string& out_dir) {
  BuiltSystem sys = load_system(cfg);
  switch (lc) {
    case LoadCase::lc12: return run_lc_static(sys, out_dir);
    case LoadCase::lc21: return run_lc_eigen(sys, EigenVariant::clamped_dry, out_dir);
    case LoadCase::lc23: return run_lc_eigen(sys, EigenVariant::soil_wet, out_dir);
    case LoadCase::lc51: return run_lc_windwave(sys, out_dir);
    default: return run_custom(sys, out_dir);
  }
}

}  // namespace owtsim
