#include <gtest/gtest.h>
#include <sys/wait.h>

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "owtsim/loadcases.hpp"

using namespace owtsim;
namespace fs = std::filesystem;

namespace {

const fs::path kSourceDir = OWTSIM_SOURCE_DIR;
const fs::path kBinaryDir = OWTSIM_BINARY_DIR;
const std::string kDemoIni = (kSourceDir / "data" / "demo.ini").string();

// Each acceptance criterion runs inside criterion(); the helper prints exactly
// one [CRITERION n] PASS/FAIL line, folding exceptions into a failure.
template <typename Body>
void criterion(int n, Body&& body) {
  std::string detail;
  try {
    detail = body();
  } catch (const std::exception& e) {
    ADD_FAILURE() << "criterion " << n << " threw: " << e.what();
    detail = std::string("exception: ") + e.what();
  }
  bool ok = !::testing::Test::HasFailure();
  std::cout << "[CRITERION " << n << "] " << (ok ? "PASS" : "FAIL");
  if (!detail.empty()) std::cout << " - " << detail;
  std::cout << std::endl;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) { return format_double(v); }

StationTable uniform_table(double z_lo, double z_hi, double d, double t, double rho = 8500,
                           double e = 2.1e11, double g = 8.08e10) {
  std::vector<Station> s = {{z_lo, d, t, rho, e, g}, {z_hi, d, t, rho, e, g}};
  return StationTable(s);
}

ChainModel cantilever(double length, double d, double t, int n,
                      const RefinementPolicy& policy = {}) {
  StationTable table = uniform_table(0.0, length, d, t);
  auto [bodies, plan] = discretize_structure(table, n, policy);
  return assemble_chain(bodies, plan, {}, {}, RootCondition::clamped);
}

// Analytic Euler-Bernoulli cantilever frequency, mode root lambda.
double eb_frequency(double lambda, double length, double d, double t, double rho = 8500,
                    double e = 2.1e11) {
  double ro = 0.5 * d, ri = 0.5 * d - t;
  double second = kPi / 4.0 * (std::pow(ro, 4) - std::pow(ri, 4));
  double area = kPi * (ro * ro - ri * ri);
  return lambda * lambda / (2.0 * kPi * length * length) * std::sqrt(e * second / (rho * area));
}

// Composite Simpson with n even panels.
template <typename F>
double simpson(double a, double b, int n, F&& f) {
  double h = (b - a) / n, s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

PYCurveSet demo_curves() {
  PYCurve shallow{1.0, {0.0, 0.01, 0.05, 0.2}, {0.0, 2e5, 6e5, 9e5}};
  PYCurve deep{20.0, {0.0, 0.01, 0.05, 0.2}, {0.0, 8e5, 2.4e6, 3.6e6}};
  return PYCurveSet({shallow, deep});
}

int run_cli(const std::string& args) {
  std::string cmd = (kBinaryDir / "owtsim").string() + " " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("owtsim_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  EXPECT_TRUE(in.good()) << path;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST(Acceptance, C01FrustumProperties) {
  criterion(1, [] {
    auto t0 = std::chrono::steady_clock::now();
    FrustumSegment seg{7.0, 4.2, 2.9, 3.9, 2.7, 8500.0};
    RigidBodyProperties p = frustum_mass_properties(seg);

    // Independent oracle: 2-D Simpson quadrature over the axisymmetric
    // cross-section. Ring at (r, z): dV = 2 pi r dr dz, dIzz = rho r^2 dV,
    // dIxx about the base plane = rho (r^2/2 + z^2) dV.
    auto ring = [&](double z, auto&& g) {
      return simpson(seg.inner_at(z), seg.outer_at(z), 64,
                     [&](double r) { return 2.0 * kPi * r * g(r); });
    };
    double vol = simpson(0.0, seg.h, 256, [&](double z) {
      return ring(z, [](double) { return 1.0; });
    });
    double z_mom = simpson(0.0, seg.h, 256, [&](double z) {
      return z * ring(z, [](double) { return 1.0; });
    });
    double izz = seg.density * simpson(0.0, seg.h, 256, [&](double z) {
      return ring(z, [](double r) { return r * r; });
    });
    double ixx_base = seg.density * simpson(0.0, seg.h, 256, [&](double z) {
      return ring(z, [&](double r) { return 0.5 * r * r + z * z; });
    });
    double mass = seg.density * vol;
    double z_cm = z_mom / vol;
    double ixx = ixx_base - mass * z_cm * z_cm;

    double err = 0;
    auto rel = [&](double a, double b) { err = std::max(err, std::abs(a - b) / std::abs(b)); };
    rel(p.volume, vol);
    rel(p.mass, mass);
    rel(p.z_cm, z_cm);
    rel(p.I_zz, izz);
    rel(p.I_xx, ixx);
    EXPECT_LT(err, 1e-6);
    double wall = seconds_since(t0);
    EXPECT_LT(wall, 1.0);
    return "segment properties vs quadrature, max rel err " + fmt(err);
  });
}

TEST(Acceptance, C02CantileverStatics) {
  criterion(2, [] {
    const double length = 100.0, d = 6.0, t = 0.06, p = 1e4;
    // A refinement break keeps the first torque cluster close to the root so
    // the root moment is sampled near z = 0.
    RefinementPolicy policy;
    policy.break_elevations = {0.5};
    ChainModel model = cantilever(length, d, t, 50, policy);

    EnvironmentLoads env = EnvironmentLoads::none();
    env.yaw_loads = LoadSeries::constant(Vec3(p, 0, 0), Vec3::Zero());
    VecX q = static_equilibrium(model, env);
    Kinematics kin = compute_kinematics(model, q, VecX::Zero(model.ndof()));
    double tip = point_position(kin, model.nodes.back().link, model.nodes.back().offset).x();

    double ro = 0.5 * d, ri = ro - t;
    double ei = 2.1e11 * kPi / 4.0 * (std::pow(ro, 4) - std::pow(ri, 4));
    double tip_exact = p * std::pow(length, 3) / (3.0 * ei);
    EXPECT_NEAR(tip, tip_exact, 0.01 * tip_exact);

    SystemState state{q, VecX::Zero(model.ndof()), 0};
    InternalMoment root = internal_moment(model, state, 0.0);
    double m_exact = p * length;
    EXPECT_NEAR(root.spring.y(), m_exact, 0.01 * m_exact);
    return "tip " + fmt(tip) + " m vs " + fmt(tip_exact) + " m, root moment " +
           fmt(root.spring.y()) + " vs " + fmt(m_exact) + " N m";
  });
}

TEST(Acceptance, C03CantileverEigenConvergence) {
  criterion(3, [] {
    auto t0 = std::chrono::steady_clock::now();
    // Slender tube: the beam-theory comparison stays clean of the short-beam
    // effects the analytic reference leaves out.
    const double length = 100.0, d = 1.0, t = 0.01;
    double f1_exact = eb_frequency(1.8751, length, d, t);
    double f2_exact = eb_frequency(4.6941, length, d, t);

    std::vector<double> err1, err2;
    for (int n : {5, 10, 20, 50}) {
      ChainModel model = cantilever(length, d, t, n);
      LinearizedSystem sys = linearize(model, VecX::Zero(model.ndof()),
                                       EnvironmentLoads::none());
      std::vector<double> f = eigenfrequencies(sys.M, sys.K);
      // Lateral modes come in x/y twins; entries 0-1 are mode 1, 2-3 mode 2.
      err1.push_back(std::abs(f[0] - f1_exact) / f1_exact);
      err2.push_back(std::abs(f[2] - f2_exact) / f2_exact);
    }
    for (std::size_t i = 1; i < err1.size(); ++i) {
      EXPECT_LT(err1[i], err1[i - 1]) << "f1 error not decreasing at step " << i;
      EXPECT_LT(err2[i], err2[i - 1]) << "f2 error not decreasing at step " << i;
    }
    EXPECT_LT(err1.back(), 0.005);
    EXPECT_LT(err2.back(), 0.02);
    double wall = seconds_since(t0);
    EXPECT_LT(wall, 10.0);
    return "n=50 errors f1 " + fmt(err1.back() * 100) + "%, f2 " + fmt(err2.back() * 100) +
           "%, monotone over n=5..50, " + fmt(wall) + " s";
  });
}

TEST(Acceptance, C04EnergyConservation) {
  criterion(4, [] {
    ChainModel model = cantilever(120.0, 5.0, 0.05, 20);
    EnvironmentLoads pull = EnvironmentLoads::none();
    pull.yaw_loads = LoadSeries::constant(Vec3(5e4, 0, 0), Vec3::Zero());
    VecX q0 = static_equilibrium(model, pull);

    SimulateOptions opt;
    opt.t_end = 100.0;
    opt.dt = 1e-3;
    opt.integrator.method = Integrator::rk4;
    opt.initial_state = SystemState{q0, VecX::Zero(model.ndof()), 0};
    double e0 = -1, worst = 0;
    opt.state_observer = [&](const SystemState& s, const VecX&) {
      Kinematics kin = compute_kinematics(model, s.q, s.qd);
      double e = kinetic_energy(model, kin) + spring_energy(model, s.q);
      if (e0 < 0) e0 = e;
      worst = std::max(worst, std::abs(e - e0) / e0);
    };
    simulate(model, EnvironmentLoads::none(), opt, {});
    EXPECT_GT(e0, 0.0);
    EXPECT_LT(worst, 1e-3);
    return "20-joint free vibration, 100 s rk4: max |dE|/E0 = " + fmt(worst * 100) + "%";
  });
}

TEST(Acceptance, C05SoilSpringIdentities) {
  criterion(5, [] {
    PYCurveSet curves = demo_curves();

    // Secant stiffness times deflection reproduces the curve resistance.
    double worst = 0;
    for (double depth : {0.5, 3.0, 7.0, 19.0}) {
      for (double y : {1e-4, 0.003, 0.02, 0.08, 0.15, 0.35, -0.02}) {
        double ks = secant_stiffness(curves, depth, y, 1.7);
        double p = lateral_resistance(curves, depth, y) * 1.7;
        worst = std::max(worst, std::abs(ks * y - p) / std::max(std::abs(p), 1e-30));
      }
    }
    EXPECT_LT(worst, 1e-12);

    // Dashpot coefficient spot value.
    double cs = damping_coefficient(2e5, 0.1, 0.2);
    EXPECT_NEAR(cs, 31831.0, 0.05);

    // A full displacement cycle dissipates energy iff beta_s > 0.
    auto cycle_loss = [&](double beta) {
      SoilNodeConfig cfg{-3.0, 1.0, beta, 0.25};
      const double amp = 0.05, omega = 2.0 * kPi * cfg.f_load;
      const int steps = 20000;
      double w = 0, dt = (1.0 / cfg.f_load) / steps;
      for (int i = 0; i < steps; ++i) {
        double t = i * dt;
        double y = amp * std::sin(omega * t);
        double yd = amp * omega * std::cos(omega * t);
        w -= soil_reaction_force(curves, cfg, y, yd) * yd * dt;
      }
      return w;
    };
    double lossy = cycle_loss(0.1), elastic = cycle_loss(0.0);
    EXPECT_GT(lossy, 0.0);
    EXPECT_NEAR(elastic, 0.0, 1e-6 * lossy);
    return "K_s y = p l_s to " + fmt(worst) + ", C_s(2e5, 0.1, 0.2 Hz) = " + fmt(cs) +
           ", cycle loss " + fmt(lossy) + " J (elastic " + fmt(elastic) + ")";
  });
}

TEST(Acceptance, C06WaveRealization) {
  criterion(6, [] {
    SeaStateConfig cfg;
    cfg.hs = 1.25;
    cfg.tp = 5.5;
    cfg.water_depth = 30.0;
    cfg.seed = 7;
    WaveRealization wave = synthesize_sea(cfg);

    // Every component satisfies the dispersion relation.
    double disp_worst = 0;
    for (const auto& c : wave.components) {
      double lhs = kGravity * c.wavenumber * std::tanh(c.wavenumber * cfg.water_depth);
      disp_worst = std::max(disp_worst, std::abs(lhs - c.omega * c.omega) / (c.omega * c.omega));
    }
    EXPECT_LT(disp_worst, 1e-10);

    // Sampled surface-elevation variance against the Hs^2/16 target.
    const double duration = 3600.0, fs = 4.0;
    const int n = static_cast<int>(duration * fs);
    double sum = 0, sum2 = 0;
    for (int i = 0; i < n; ++i) {
      double eta = wave.surface_elevation(0.0, i / fs);
      sum += eta;
      sum2 += eta * eta;
    }
    double mean = sum / n;
    double var = sum2 / n - mean * mean;
    double target = cfg.hs * cfg.hs / 16.0;
    EXPECT_NEAR(var, target, 0.03 * target);
    return "eta variance " + fmt(var) + " vs Hs^2/16 = " + fmt(target) + " over " +
           fmt(duration) + " s, dispersion residual " + fmt(disp_worst);
  });
}

TEST(Acceptance, C07FddOracle) {
  criterion(7, [] {
    auto t0 = std::chrono::steady_clock::now();

    // 3-DOF mass-spring oracle with analytically known modes, sampled through
    // an exact modal zero-order-hold recursion under seeded white noise.
    Eigen::Matrix3d M = Eigen::Vector3d(2.0, 1.0, 1.5).asDiagonal();
    double k1 = 9000.0 / 16, k2 = 5000.0 / 16, k3 = 7000.0 / 16;
    Eigen::Matrix3d K;
    K << k1 + k2, -k2, 0, -k2, k2 + k3, -k3, 0, -k3, k3;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix3d> es(K, M);
    Eigen::Vector3d omega = es.eigenvalues().cwiseSqrt();
    Eigen::Matrix3d phi = es.eigenvectors();

    const double fs = 50.0, zeta = 0.005, h = 1.0 / fs;
    const int n = 1 << 17;
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<VecX> acc(3, VecX(n));
    Eigen::Vector3d eta = Eigen::Vector3d::Zero(), etad = Eigen::Vector3d::Zero();
    for (int s = 0; s < n; ++s) {
      Eigen::Vector3d u = phi.transpose() * Eigen::Vector3d(dist(rng), dist(rng), dist(rng));
      Eigen::Vector3d etadd;
      for (int m = 0; m < 3; ++m) {
        double w = omega[m], wd = w * std::sqrt(1.0 - zeta * zeta);
        double e = std::exp(-zeta * w * h), c = std::cos(wd * h), sn = std::sin(wd * h);
        double x1 = e * (c + zeta * w * sn / wd) * eta[m] + e * sn / wd * etad[m] +
                    (1.0 - e * (c + zeta * w * sn / wd)) / (w * w) * u[m];
        double x2 = -e * w * w * sn / wd * eta[m] + e * (c - zeta * w * sn / wd) * etad[m] +
                    e * sn / wd * u[m];
        eta[m] = x1;
        etad[m] = x2;
        etadd[m] = u[m] - 2.0 * zeta * w * etad[m] - w * w * eta[m];
      }
      Eigen::Vector3d a = phi * etadd;
      for (int c = 0; c < 3; ++c) acc[c][s] = a[c];
    }

    SpectralConfig scfg;
    scfg.sample_rate_hz = fs;
    scfg.nperseg = 2048;
    CsdMatrix csd = welch_csd_matrix(acc, scfg);
    std::vector<std::pair<double, double>> bands;
    for (int m = 0; m < 3; ++m)
      bands.push_back({omega[m] / (2.0 * kPi) - 0.5, omega[m] / (2.0 * kPi) + 0.5});
    FddResult fdd = fdd_identify(csd, bands);

    double f_err_bins = 0, mac_min = 1;
    for (int m = 0; m < 3; ++m) {
      double f_true = omega[m] / (2.0 * kPi);
      f_err_bins = std::max(f_err_bins,
                            std::abs(fdd.modes[m].frequency_hz - f_true) / scfg.df());
      Eigen::VectorXcd analytic = phi.col(m).cast<std::complex<double>>();
      mac_min = std::min(mac_min, mac(fdd.modes[m].shape, analytic));
    }
    EXPECT_LE(f_err_bins, 1.0 + 1e-9);
    EXPECT_GE(mac_min, 0.95);
    double wall = seconds_since(t0);
    EXPECT_LT(wall, 30.0);
    return "3-DOF oracle: worst frequency error " + fmt(f_err_bins) + " bins, min MAC " +
           fmt(mac_min) + ", " + fmt(wall) + " s";
  });
}

TEST(Acceptance, C08PhysicalTrends) {
  criterion(8, [] {
    // Foundation compliance and added mass both soften the system.
    RunConfig base = parse_config(kDemoIni);
    BuiltSystem sys = load_system(base);
    auto f_low = [](const ChainModel& m, int count) {
      // Soil springs stay active; gravity off for a pure stiffness/mass
      // comparison between the variants.
      EnvironmentLoads env;
      env.gravity.setZero();
      LinearizedSystem lin = linearize(m, VecX::Zero(m.ndof()), env);
      std::vector<double> f = eigenfrequencies(lin.M, lin.K);
      return std::vector<double>(f.begin(), f.begin() + count);
    };
    ChainModel clamped = build_variant(sys, false, false);
    ChainModel soil_dry = build_variant(sys, true, false);
    ChainModel soil_wet = build_variant(sys, true, true);
    double f1_clamped = f_low(clamped, 1)[0];
    double f1_soil = f_low(soil_dry, 1)[0];
    EXPECT_LT(f1_soil, f1_clamped);
    std::vector<double> f_dry = f_low(soil_dry, 6), f_wet = f_low(soil_wet, 6);
    for (int i = 0; i < 6; ++i) EXPECT_LT(f_wet[i], f_dry[i] + 1e-12) << "mode " << i;

    // Higher soil damping drains response energy in both report bands. The
    // sweep runs without structural damping targets so the soil contribution
    // is the only thing changing.
    std::vector<double> band1, band2;
    for (double beta : {0.05, 0.10, 0.20}) {
      RunConfig cfg = parse_config(
          kDemoIni, {"damping.targets=", "lc51.duration_s=500", "lc51.transient_s=100",
                     "spectral.nperseg=1024", "soil.beta_s=" + fmt(beta)});
      fs::path out = fresh_dir("c8_beta_" + fmt(beta));
      RunSummary s = run_lc_windwave(load_system(cfg), out.string());
      band1.push_back(s.results.at("band1_sum_Nm2").get<double>());
      band2.push_back(s.results.at("band2_sum_Nm2").get<double>());
    }
    for (int i = 1; i < 3; ++i) {
      EXPECT_LT(band1[i], band1[i - 1]) << "band1 not decreasing";
      EXPECT_LT(band2[i], band2[i - 1]) << "band2 not decreasing";
    }
    // First-mode wave band carries far more energy than the 3P band.
    for (int i = 0; i < 3; ++i) EXPECT_GE(band1[i], 100.0 * band2[i]);
    return "f1 " + fmt(f1_soil) + " < " + fmt(f1_clamped) +
           " Hz, added mass lowers all wet modes, band sums fall with beta_s (" +
           fmt(band1[0]) + " -> " + fmt(band1[2]) + " and " + fmt(band2[0]) + " -> " +
           fmt(band2[2]) + "), band1 >= 100 band2";
  });
}

TEST(Acceptance, C09ReferenceDataset) {
  fs::path oc6_ini = kSourceDir / "data" / "oc6" / "oc6.ini";
  if (!fs::exists(oc6_ini)) {
    std::cout << "[CRITERION 9] SKIP - reference dataset not present (data/oc6)" << std::endl;
    GTEST_SKIP() << "reference dataset not shipped";
  }
  criterion(9, [&] {
    // When a reference dataset is installed, its config carries the expected
    // first-mode band under [reference] f1_lo_hz / f1_hi_hz.
    RunConfig cfg = parse_config(oc6_ini.string());
    double lo = cfg.ini.get_double("reference", "f1_lo_hz", 0.0);
    double hi = cfg.ini.get_double("reference", "f1_hi_hz", 0.0);
    EXPECT_GT(hi, lo);
    RunSummary s = run_lc_eigen(load_system(cfg), EigenVariant::soil_wet,
                                fresh_dir("c9").string());
    double f1 = -1;
    for (const auto& m : s.results.at("modes"))
      if (m.at("class") == "fore-aft") {
        f1 = m.at("f_Hz").get<double>();
        break;
      }
    EXPECT_GE(f1, lo);
    EXPECT_LE(f1, hi);
    return "first fore-aft mode " + fmt(f1) + " Hz inside [" + fmt(lo) + ", " + fmt(hi) + "]";
  });
}

TEST(Acceptance, C10Determinism) {
  criterion(10, [] {
    EXPECT_TRUE(fs::exists(kBinaryDir / "owtsim"));
    std::string base = "run --config " + kDemoIni +
                       " --case LC51 --seed 42"
                       " --set structure.n_elements=8 --set lc51.duration_s=120"
                       " --set lc51.transient_s=20 --set spectral.nperseg=256";
    fs::path a = fresh_dir("c10_a"), b = fresh_dir("c10_b");
    EXPECT_EQ(run_cli(base + " --out " + a.string()), 0);
    EXPECT_EQ(run_cli(base + " --out " + b.string()), 0);

    int compared = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
      fs::path name = entry.path().filename();
      EXPECT_TRUE(fs::exists(b / name)) << name;
      EXPECT_EQ(read_file(entry.path()), read_file(b / name)) << name;
      ++compared;
    }
    EXPECT_GE(compared, 3);
    return "repeated run with fixed seed: " + std::to_string(compared) +
           " output files byte-identical";
  });
}
