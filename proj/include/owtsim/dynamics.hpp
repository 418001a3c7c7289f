#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "owtsim/chain.hpp"
#include "owtsim/csv.hpp"

namespace owtsim {

struct SystemState {
  VecX q;
  VecX qd;
  double t = 0;

  static SystemState rest(const ChainModel& model, double t = 0) {
    return {VecX::Zero(model.ndof()), VecX::Zero(model.ndof()), t};
  }
};

// Concentrated yaw-bearing loads, linearly interpolated in time. Queries
// outside the tabulated range are refused rather than extrapolated.
class LoadSeries {
 public:
  LoadSeries() = default;
  LoadSeries(std::vector<double> t, std::vector<Vec3> force, std::vector<Vec3> moment)
      : t_(std::move(t)), force_(std::move(force)), moment_(std::move(moment)) {
    if (t_.empty() || t_.size() != force_.size() || t_.size() != moment_.size())
      throw ConfigError("load series needs consistent, non-empty samples");
    for (std::size_t i = 1; i < t_.size(); ++i)
      if (!(t_[i] > t_[i - 1])) throw ConfigError("load series times must strictly increase");
  }

  static LoadSeries from_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    const std::vector<std::string> want = {"t_s",   "Fx_N",  "Fy_N", "Fz_N",
                                           "Mx_Nm", "My_Nm", "Mz_Nm"};
    if (table.header != want)
      throw ConfigError(path + ": expected header t_s,Fx_N,Fy_N,Fz_N,Mx_Nm,My_Nm,Mz_Nm");
    std::vector<double> t;
    std::vector<Vec3> f, m;
    for (const auto& row : table.rows) {
      t.push_back(row[0]);
      f.emplace_back(row[1], row[2], row[3]);
      m.emplace_back(row[4], row[5], row[6]);
    }
    return LoadSeries(std::move(t), std::move(f), std::move(m));
  }

  static LoadSeries constant(const Vec3& force, const Vec3& moment, double t0 = 0,
                             double t1 = 1e12) {
    return LoadSeries({t0, t1}, {force, force}, {moment, moment});
  }

  double t_begin() const { return t_.front(); }
  double t_end() const { return t_.back(); }

  void sample(double t, Vec3& force, Vec3& moment) const {
    if (t < t_.front() - 1e-9 || t > t_.back() + 1e-9)
      throw ConfigError("load series queried at t=" + format_double(t) + " outside [" +
                        format_double(t_.front()) + ", " + format_double(t_.back()) + "]");
    if (t_.size() == 1) {
      force = force_.front();
      moment = moment_.front();
      return;
    }
    t = std::clamp(t, t_.front(), t_.back());
    auto hi = std::upper_bound(t_.begin(), t_.end(), t);
    if (hi == t_.begin()) ++hi;
    if (hi == t_.end()) --hi;
    std::size_t i = static_cast<std::size_t>(hi - t_.begin());
    double w = (t - t_[i - 1]) / (t_[i] - t_[i - 1]);
    force = (1 - w) * force_[i - 1] + w * force_[i];
    moment = (1 - w) * moment_[i - 1] + w * moment_[i];
  }

 private:
  std::vector<double> t_;
  std::vector<Vec3> force_;
  std::vector<Vec3> moment_;
};

struct WaveEnvironment {
  SeaStateConfig cfg;
  WaveRealization waves;

  static WaveEnvironment synthesize(const SeaStateConfig& cfg) {
    return {cfg, synthesize_sea(cfg)};
  }
};

struct EnvironmentLoads {
  Vec3 gravity = Vec3(0, 0, -kGravity);
  std::optional<WaveEnvironment> sea;
  std::optional<LoadSeries> yaw_loads;
  bool soil_active = true;

  static EnvironmentLoads none() {
    EnvironmentLoads env;
    env.gravity.setZero();
    env.soil_active = false;
    return env;
  }
};

// ---------------------------------------------------------------------------
// Kinematics

namespace detail {

inline Vec6 joint_subspace(const Dof& d) {
  Vec6 s = Vec6::Zero();
  if (d.type == DofType::revolute)
    s.head<3>() = d.axis;
  else
    s.tail<3>() = d.axis;
  return s;
}

}  // namespace detail

// World-frame pose and velocity of every link plus the link-frame joint
// transforms consumed by the O(n) recursions.
struct Kinematics {
  VecX q, qd;
  std::vector<SpatialTransform> x_up;  // parent link frame -> link frame
  std::vector<Mat3> R;                 // link -> world rotation
  std::vector<Vec3> p;                 // world position of the link origin
  std::vector<Vec3> axis_w;            // joint axis in world coordinates
  std::vector<Vec3> omega;             // world angular velocity
  std::vector<Vec3> vel;               // world velocity of the origin material point
  std::vector<Vec6> v_link;            // link-frame spatial velocity
};

inline Kinematics compute_kinematics(const ChainModel& model, const VecX& q, const VecX& qd) {
  const int n = model.ndof();
  if (q.size() != n || qd.size() != n) throw ConfigError("state size mismatch");
  Kinematics kin;
  kin.q = q;
  kin.qd = qd;
  kin.x_up.resize(n);
  kin.R.resize(n);
  kin.p.resize(n);
  kin.axis_w.resize(n);
  kin.omega.resize(n);
  kin.vel.resize(n);
  kin.v_link.resize(n);
  for (int k = 0; k < n; ++k) {
    const Dof& d = model.dofs[k];
    SpatialTransform xj;  // joint transform on top of the tree transform
    if (d.type == DofType::revolute)
      xj.E = Eigen::AngleAxisd(q[k], d.axis).toRotationMatrix().transpose();
    else
      xj.r = d.axis * q[k];
    kin.x_up[k] = xj.compose(d.x_tree);

    const Mat3 R_parent = d.parent >= 0 ? kin.R[d.parent] : Mat3::Identity();
    const Vec3 p_parent = d.parent >= 0 ? kin.p[d.parent] : Vec3::Zero();
    const Vec6 v_parent = d.parent >= 0 ? kin.v_link[d.parent] : Vec6::Zero();

    kin.R[k] = R_parent * kin.x_up[k].E.transpose();
    kin.p[k] = p_parent + R_parent * kin.x_up[k].r;
    kin.axis_w[k] = kin.R[k] * d.axis;
    kin.v_link[k] = kin.x_up[k].apply_motion(v_parent) + detail::joint_subspace(d) * qd[k];
    kin.omega[k] = kin.R[k] * kin.v_link[k].head<3>();
    // The linear part of v_link is the velocity of the body-fixed point at
    // the link origin, in link axes.
    kin.vel[k] = kin.R[k] * kin.v_link[k].tail<3>();
  }
  return kin;
}

inline Vec3 point_position(const Kinematics& kin, int link, const Vec3& offset) {
  if (link < 0) return offset;  // ground-fixed point
  return kin.p[link] + kin.R[link] * offset;
}

inline Vec3 point_velocity(const Kinematics& kin, int link, const Vec3& offset) {
  if (link < 0) return Vec3::Zero();
  return kin.vel[link] + kin.omega[link].cross(kin.R[link] * offset);
}

using Jacobian3 = Eigen::Matrix<double, 3, Eigen::Dynamic>;

// Translational Jacobian of a material point. On the serial chain every dof
// on the path to ground (parent links) contributes.
inline void point_jacobian(const ChainModel& model, const Kinematics& kin, int link,
                           const Vec3& offset, Jacobian3& jac) {
  jac.setZero(3, model.ndof());
  if (link < 0) return;
  const Vec3 pt = point_position(kin, link, offset);
  for (int k = link; k >= 0; k = model.dofs[k].parent) {
    if (model.dofs[k].type == DofType::revolute)
      jac.col(k) = kin.axis_w[k].cross(pt - kin.p[k]);
    else
      jac.col(k) = kin.axis_w[k];
  }
}

inline void rotation_jacobian(const ChainModel& model, const Kinematics& kin, int link,
                              Jacobian3& jac) {
  jac.setZero(3, model.ndof());
  if (link < 0) return;
  for (int k = link; k >= 0; k = model.dofs[k].parent)
    if (model.dofs[k].type == DofType::revolute) jac.col(k) = kin.axis_w[k];
}

// World angular/linear accelerations of every link origin for a given qdd;
// qdd = 0 yields the velocity-product bias accelerations.
struct Accelerations {
  std::vector<Vec3> alpha;  // world angular acceleration
  std::vector<Vec3> acc;    // world acceleration of the origin material point
};

inline Accelerations compute_accelerations(const ChainModel& model, const Kinematics& kin,
                                           const VecX& qdd) {
  const int n = model.ndof();
  Accelerations out;
  out.alpha.resize(n);
  out.acc.resize(n);
  std::vector<Vec6> a(n);  // link-frame spatial acceleration
  for (int k = 0; k < n; ++k) {
    const Dof& d = model.dofs[k];
    const Vec6 s = detail::joint_subspace(d);
    const Vec6 a_parent = d.parent >= 0 ? a[d.parent] : Vec6::Zero();
    a[k] = kin.x_up[k].apply_motion(a_parent) + s * qdd[k] +
           cross_motion(kin.v_link[k], s * kin.qd[k]);
    out.alpha[k] = kin.R[k] * a[k].head<3>();
    // Spatial linear acceleration tracks the coincident point; add the
    // convective term to recover the material-point acceleration.
    out.acc[k] = kin.R[k] * a[k].tail<3>() +
                 kin.omega[k].cross(kin.R[k] * kin.v_link[k].tail<3>());
  }
  return out;
}

inline Vec3 point_acceleration(const Kinematics& kin, const Accelerations& acc, int link,
                               const Vec3& offset) {
  if (link < 0) return Vec3::Zero();
  const Vec3 r = kin.R[link] * offset;
  return acc.acc[link] + acc.alpha[link].cross(r) +
         kin.omega[link].cross(kin.omega[link].cross(r));
}

// ---------------------------------------------------------------------------
// Dynamics recursions

// Recursive Newton-Euler: joint torques realizing qdd at the current state
// under uniform gravity (applied as a fictitious base acceleration). With
// qdd = 0, gravity = 0 this returns the velocity-product bias torques; with
// use_velocities = false it returns pure gravity torques.
inline VecX inverse_dynamics(const ChainModel& model, const Kinematics& kin, const VecX& qdd,
                             const Vec3& gravity, bool use_velocities = true) {
  const int n = model.ndof();
  std::vector<Vec6> a(n), f(n);
  Vec6 a0 = Vec6::Zero();
  a0.tail<3>() = -gravity;
  for (int k = 0; k < n; ++k) {
    const Dof& d = model.dofs[k];
    const Vec6 s = detail::joint_subspace(d);
    const Vec6 a_parent = d.parent >= 0 ? a[d.parent] : a0;
    a[k] = kin.x_up[k].apply_motion(a_parent) + s * qdd[k];
    if (use_velocities) {
      const Vec6& v = kin.v_link[k];
      a[k] += cross_motion(v, s * kin.qd[k]);
      f[k] = d.inertia.apply(a[k]) + cross_force(v, d.inertia.apply(v));
    } else {
      f[k] = d.inertia.apply(a[k]);
    }
  }
  VecX tau(n);
  for (int k = n - 1; k >= 0; --k) {
    tau[k] = detail::joint_subspace(model.dofs[k]).dot(f[k]);
    if (model.dofs[k].parent >= 0)
      f[model.dofs[k].parent] += kin.x_up[k].apply_force_to_parent(f[k]);
  }
  return tau;
}

inline VecX bias_torques(const ChainModel& model, const Kinematics& kin) {
  return inverse_dynamics(model, kin, VecX::Zero(model.ndof()), Vec3::Zero(), true);
}

inline VecX gravity_torques(const ChainModel& model, const Kinematics& kin,
                            const Vec3& gravity) {
  return inverse_dynamics(model, kin, VecX::Zero(model.ndof()), gravity, false);
}

// Composite-rigid-body mass matrix plus hydro added mass via strip Jacobians.
inline MatX mass_matrix(const ChainModel& model, const Kinematics& kin) {
  const int n = model.ndof();
  std::vector<SpatialInertia> ic(n);
  for (int k = 0; k < n; ++k) ic[k] = model.dofs[k].inertia;
  MatX M = MatX::Zero(n, n);
  for (int k = n - 1; k >= 0; --k) {
    const Vec6 s = detail::joint_subspace(model.dofs[k]);
    Vec6 F = ic[k].apply(s);
    M(k, k) = s.dot(F);
    int j = k;
    while (model.dofs[j].parent >= 0) {
      F = kin.x_up[j].apply_force_to_parent(F);
      j = model.dofs[j].parent;
      M(k, j) = M(j, k) = detail::joint_subspace(model.dofs[j]).dot(F);
    }
    if (model.dofs[k].parent >= 0)
      ic[model.dofs[k].parent] += ic[k].to_parent(kin.x_up[k]);
  }
  if (!model.strips.empty()) {
    Jacobian3 J(3, n);
    for (const auto& strip : model.strips) {
      point_jacobian(model, kin, strip.link, strip.offset, J);
      // Horizontal added mass only, matching the horizontal Morison flow model.
      M.noalias() += strip.added_mass * (J.row(0).transpose() * J.row(0) +
                                         J.row(1).transpose() * J.row(1));
    }
  }
  return M;
}

inline MatX mass_matrix(const ChainModel& model, const VecX& q) {
  return mass_matrix(model, compute_kinematics(model, q, VecX::Zero(model.ndof())));
}

// Joint spring/damper generalized forces, -K q - c qd per dof.
inline VecX spring_forces(const ChainModel& model, const VecX& q, const VecX& qd) {
  VecX out(model.ndof());
  for (int k = 0; k < model.ndof(); ++k)
    out[k] = -(model.dofs[k].spring_k * q[k] + model.dofs[k].damper_c * qd[k]);
  return out;
}

// Everything on the right-hand side except the velocity-product bias:
// springs/dampers, gravity, soil reactions, Morison excitation (with the
// added-mass velocity remainder), and applied yaw-bearing loads.
inline VecX generalized_forces(const ChainModel& model, const Kinematics& kin, double t,
                               const EnvironmentLoads& env, bool include_springs = true) {
  const int n = model.ndof();
  VecX Q = include_springs ? spring_forces(model, kin.q, kin.qd) : VecX(VecX::Zero(n));
  if (!env.gravity.isZero()) Q -= gravity_torques(model, kin, env.gravity);
  Jacobian3 J(3, n);
  if (env.soil_active && !model.soil_nodes.empty()) {
    for (const auto& node : model.soil_nodes) {
      const Vec3 pos = point_position(kin, node.link, node.offset);
      const Vec3 vel = point_velocity(kin, node.link, node.offset);
      const double fx = soil_reaction_force(model.soil_curves, node.cfg, pos.x(), vel.x());
      const double fy = soil_reaction_force(model.soil_curves, node.cfg, pos.y(), vel.y());
      point_jacobian(model, kin, node.link, node.offset, J);
      Q.noalias() += J.row(0).transpose() * fx + J.row(1).transpose() * fy;
    }
  }
  if (!model.strips.empty() && env.sea) {
    // The structural added-mass term -m_a u_s_dot splits into the mass-matrix
    // part -m_a J qdd and this velocity-product remainder.
    const Accelerations bias = compute_accelerations(model, kin, VecX::Zero(n));
    for (const auto& strip : model.strips) {
      double u_w = 0, u_w_dot = 0;
      env.sea->waves.kinematics(strip.strip.z, 0.0, t, u_w, u_w_dot);
      const Vec3 vs = point_velocity(kin, strip.link, strip.offset);
      const Vec3 ab = point_acceleration(kin, bias, strip.link, strip.offset);
      double fx =
          morison_excitation_force(strip.strip, u_w, u_w_dot, vs.x(), env.sea->cfg) *
              strip.strip.length -
          strip.added_mass * ab.x();
      double fy = morison_excitation_force(strip.strip, 0.0, 0.0, vs.y(), env.sea->cfg) *
                      strip.strip.length -
                  strip.added_mass * ab.y();
      point_jacobian(model, kin, strip.link, strip.offset, J);
      Q.noalias() += J.row(0).transpose() * fx + J.row(1).transpose() * fy;
    }
  }
  if (env.yaw_loads) {
    Vec3 force, moment;
    env.yaw_loads->sample(t, force, moment);
    point_jacobian(model, kin, model.yaw_link, model.yaw_offset, J);
    Q.noalias() += J.transpose() * force;
    rotation_jacobian(model, kin, model.yaw_link, J);
    Q.noalias() += J.transpose() * moment;
  }
  return Q;
}

inline VecX generalized_forces(const ChainModel& model, const SystemState& state,
                               const EnvironmentLoads& env) {
  return generalized_forces(model, compute_kinematics(model, state.q, state.qd), state.t, env);
}

// Solves M(q) qdd = Q(q, qd, t) - bias(q, qd).
inline VecX forward_dynamics(const ChainModel& model, const SystemState& state,
                             const EnvironmentLoads& env) {
  Kinematics kin = compute_kinematics(model, state.q, state.qd);
  MatX M = mass_matrix(model, kin);
  VecX rhs = generalized_forces(model, kin, state.t, env) - bias_torques(model, kin);
  Eigen::LDLT<MatX> ldlt(M);
  if (ldlt.info() != Eigen::Success) throw SolverError("mass matrix not positive definite");
  return ldlt.solve(rhs);
}

// ---------------------------------------------------------------------------
// Energies (structural; hydro added-mass energy not included)

inline double kinetic_energy(const ChainModel& model, const Kinematics& kin) {
  double t = 0;
  for (int k = 0; k < model.ndof(); ++k)
    t += model.dofs[k].inertia.kinetic_energy(kin.v_link[k]);
  return t;
}

inline double gravity_potential(const ChainModel& model, const Kinematics& kin,
                                const Vec3& gravity) {
  double v = 0;
  for (int k = 0; k < model.ndof(); ++k) {
    const SpatialInertia& si = model.dofs[k].inertia;
    if (si.m == 0 && si.h.isZero(0.0)) continue;
    v -= gravity.dot(si.m * kin.p[k] + kin.R[k] * si.h);
  }
  return v;
}

inline double spring_energy(const ChainModel& model, const VecX& q) {
  double v = 0;
  for (int k = 0; k < model.ndof(); ++k) v += 0.5 * model.dofs[k].spring_k * q[k] * q[k];
  return v;
}

// ---------------------------------------------------------------------------
// Static equilibrium

struct StaticOptions {
  double tol_factor = 1e-8;  // times the characteristic torque max K * 1e-3 rad
  int max_iterations = 100;
  int max_backtracks = 10;
  double fd_step = 1e-6;
  double time = 0;  // applied-load sampling time
};

inline VecX static_equilibrium(const ChainModel& model, const EnvironmentLoads& env,
                               const StaticOptions& opt = {}) {
  const int n = model.ndof();
  const VecX zero = VecX::Zero(n);
  const double tol = opt.tol_factor * model.max_bending_k() * 1e-3;

  auto residual = [&](const VecX& q) {
    return generalized_forces(model, compute_kinematics(model, q, zero), opt.time, env);
  };

  VecX q = zero;
  VecX r = residual(q);
  std::vector<double> history{r.lpNorm<Eigen::Infinity>()};
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    if (history.back() <= tol) return q;
    MatX K(n, n);
    for (int j = 0; j < n; ++j) {
      VecX qp = q, qm = q;
      qp[j] += opt.fd_step;
      qm[j] -= opt.fd_step;
      K.col(j) = -(residual(qp) - residual(qm)) / (2.0 * opt.fd_step);
    }
    const VecX dq = K.partialPivLu().solve(r);
    if (!dq.allFinite()) throw SolverError("static_equilibrium: singular tangent stiffness");
    double lambda = 1.0;
    VecX q_try, r_try;
    for (int bt = 0;; ++bt) {
      q_try = q + lambda * dq;
      r_try = residual(q_try);
      if (r_try.lpNorm<Eigen::Infinity>() < history.back() || bt >= opt.max_backtracks) break;
      lambda *= 0.5;
    }
    q = q_try;
    r = r_try;
    history.push_back(r.lpNorm<Eigen::Infinity>());
  }
  if (history.back() <= tol) return q;
  std::string msg = "static_equilibrium: no convergence, residual history:";
  for (double h : history) msg += " " + format_double(h);
  throw SolverError(msg);
}

// ---------------------------------------------------------------------------
// Linearization and modal analysis

struct LinearizedSystem {
  MatX M, C, K;
};

// Tangent matrices about (q*, qd = 0): K = -dQ/dq and C = -dQ/dqd by central
// differences on the non-spring forces, plus the exact joint spring/damper
// diagonals. M carries the hydro added mass.
inline LinearizedSystem linearize(const ChainModel& model, const VecX& q_star,
                                  const EnvironmentLoads& env, double fd_step = 1e-6,
                                  double time = 0) {
  const int n = model.ndof();
  const VecX zero = VecX::Zero(n);
  LinearizedSystem sys;
  sys.M = mass_matrix(model, q_star);
  sys.K.setZero(n, n);
  sys.C.setZero(n, n);

  auto forces = [&](const VecX& q, const VecX& qd) {
    return generalized_forces(model, compute_kinematics(model, q, qd), time, env,
                              /*include_springs=*/false);
  };
  for (int j = 0; j < n; ++j) {
    VecX qp = q_star, qm = q_star;
    qp[j] += fd_step;
    qm[j] -= fd_step;
    sys.K.col(j) = -(forces(qp, zero) - forces(qm, zero)) / (2.0 * fd_step);
    VecX vp = zero, vm = zero;
    vp[j] += fd_step;
    vm[j] -= fd_step;
    sys.C.col(j) = -(forces(q_star, vp) - forces(q_star, vm)) / (2.0 * fd_step);
  }
  for (int k = 0; k < n; ++k) {
    sys.K(k, k) += model.dofs[k].spring_k;
    sys.C(k, k) += model.dofs[k].damper_c;
  }
  return sys;
}

enum class ModeClass { fore_aft, side_side, torsion };

inline const char* mode_class_name(ModeClass c) {
  switch (c) {
    case ModeClass::fore_aft: return "fore-aft";
    case ModeClass::side_side: return "side-side";
    default: return "torsion";
  }
}

struct Mode {
  double frequency_hz = 0;
  double damping_ratio = 0;
  VecX shape;                       // dof space
  std::vector<Vec3> node_disp;     // world translation per output node
  std::vector<double> node_twist;  // rotation about the structure axis, rad
  ModeClass cls = ModeClass::fore_aft;
};

struct ModalResult {
  std::vector<Mode> modes;

  std::vector<double> frequencies() const {
    std::vector<double> f;
    f.reserve(modes.size());
    for (const auto& m : modes) f.push_back(m.frequency_hz);
    return f;
  }

  // First n_th mode of the requested class, counting from 0.
  const Mode& by_class(ModeClass cls, int n_th = 0) const {
    int seen = 0;
    for (const auto& m : modes)
      if (m.cls == cls && seen++ == n_th) return m;
    throw SolverError(std::string("no ") + mode_class_name(cls) + " mode #" +
                      std::to_string(n_th) + " identified");
  }
};

// Generalized symmetric eigenproblem K phi = omega^2 M phi. Shapes are
// carried to the output nodes through the point Jacobians at q_ref, scaled to
// unit maximum translational component (twist fallback for pure torsion), and
// classified by the dominant motion family.
inline ModalResult eigenmodes(const ChainModel& model, const MatX& M, const MatX& K_lin,
                              const VecX& q_ref) {
  const int n = model.ndof();
  const MatX K_sym = 0.5 * (K_lin + K_lin.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<MatX> es(K_sym, M);
  if (es.info() != Eigen::Success)
    throw SolverError("eigenmodes: generalized eigensolver failed (M not SPD?)");

  Kinematics kin = compute_kinematics(model, q_ref, VecX::Zero(n));
  std::vector<Jacobian3> jp(model.nodes.size()), jr(model.nodes.size());
  for (std::size_t i = 0; i < model.nodes.size(); ++i) {
    jp[i].resize(3, n);
    jr[i].resize(3, n);
    point_jacobian(model, kin, model.nodes[i].link, model.nodes[i].offset, jp[i]);
    rotation_jacobian(model, kin, model.nodes[i].link, jr[i]);
  }
  // Twist competes with lateral motion through the section radius: a twist of
  // theta moves material by ~theta * r, not theta * span.
  const double twist_arm = model.char_radius;

  ModalResult result;
  const double lambda_max = std::abs(es.eigenvalues()[n - 1]);
  for (int m = 0; m < n; ++m) {
    const double lambda = es.eigenvalues()[m];
    if (lambda <= 0 || lambda < 1e-14 * lambda_max)
      throw SolverError("eigenmodes: non-positive stiffness eigenvalue " +
                        format_double(lambda));
    Mode mode;
    mode.frequency_hz = std::sqrt(lambda) / (2.0 * kPi);
    mode.shape = es.eigenvectors().col(m);
    mode.node_disp.resize(model.nodes.size());
    mode.node_twist.resize(model.nodes.size());
    double amp_x = 0, amp_y = 0, amp_t = 0, max_trans = 0, signed_peak = 0;
    for (std::size_t i = 0; i < model.nodes.size(); ++i) {
      mode.node_disp[i] = jp[i] * mode.shape;
      mode.node_twist[i] = (jr[i] * mode.shape).z();
      amp_x = std::max(amp_x, std::abs(mode.node_disp[i].x()));
      amp_y = std::max(amp_y, std::abs(mode.node_disp[i].y()));
      amp_t = std::max(amp_t, std::abs(mode.node_twist[i]));
      for (int c = 0; c < 3; ++c) {
        double v = mode.node_disp[i][c];
        if (std::abs(v) > max_trans) {
          max_trans = std::abs(v);
          signed_peak = v;
        }
      }
    }
    if (amp_x >= amp_y && amp_x >= amp_t * twist_arm)
      mode.cls = ModeClass::fore_aft;
    else if (amp_y >= amp_t * twist_arm)
      mode.cls = ModeClass::side_side;
    else
      mode.cls = ModeClass::torsion;

    double scale;
    if (max_trans > 1e-9 * amp_t * twist_arm && max_trans > 0) {
      scale = 1.0 / signed_peak;
    } else {
      // Pure torsion: no translational motion to normalize against.
      double peak = 0;
      for (double tw : mode.node_twist)
        if (std::abs(tw) > std::abs(peak)) peak = tw;
      scale = peak != 0 ? 1.0 / peak : 1.0;
    }
    mode.shape *= scale;
    for (auto& d : mode.node_disp) d *= scale;
    for (auto& t : mode.node_twist) t *= scale;
    result.modes.push_back(std::move(mode));
  }
  return result;
}

// Frequencies only, for matrix-level tests.
inline std::vector<double> eigenfrequencies(const MatX& M, const MatX& K_lin) {
  const MatX K_sym = 0.5 * (K_lin + K_lin.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<MatX> es(K_sym, M);
  if (es.info() != Eigen::Success) throw SolverError("eigenfrequencies: solver failed");
  std::vector<double> f;
  for (int m = 0; m < K_lin.rows(); ++m)
    f.push_back(es.eigenvalues()[m] > 0 ? std::sqrt(es.eigenvalues()[m]) / (2.0 * kPi) : 0.0);
  return f;
}

// One-call modal analysis about an equilibrium.
inline ModalResult modal_analysis(const ChainModel& model, const VecX& q_star,
                                  const EnvironmentLoads& env) {
  LinearizedSystem sys = linearize(model, q_star, env);
  return eigenmodes(model, sys.M, sys.K, q_star);
}

// ---------------------------------------------------------------------------
// Damped (complex) modes and damping calibration

struct DampedMode {
  double frequency_hz = 0;  // |lambda| / 2 pi
  double zeta = 0;          // -Re(lambda)/|lambda|
};

// Underdamped modes of (M, C, K) from the first-order state matrix, ascending
// in frequency; one entry per conjugate pair.
inline std::vector<DampedMode> damped_modes(const MatX& M, const MatX& C, const MatX& K) {
  const int n = static_cast<int>(M.rows());
  Eigen::LDLT<MatX> ldlt(M);
  if (ldlt.info() != Eigen::Success) throw SolverError("damped_modes: M not positive definite");
  MatX A = MatX::Zero(2 * n, 2 * n);
  A.topRightCorner(n, n).setIdentity();
  A.bottomLeftCorner(n, n) = -ldlt.solve(K);
  A.bottomRightCorner(n, n) = -ldlt.solve(C);
  Eigen::EigenSolver<MatX> es(A);
  if (es.info() != Eigen::Success) throw SolverError("damped_modes: eigensolver failed");
  std::vector<DampedMode> out;
  for (int i = 0; i < 2 * n; ++i) {
    const std::complex<double> lam = es.eigenvalues()[i];
    const double mag = std::abs(lam);
    if (lam.imag() > 1e-10 * std::max(mag, 1.0)) {
      DampedMode dm;
      dm.frequency_hz = mag / (2.0 * kPi);
      dm.zeta = mag > 0 ? -lam.real() / mag : 0.0;
      out.push_back(dm);
    }
  }
  std::sort(out.begin(), out.end(),
            [](const DampedMode& a, const DampedMode& b) { return a.frequency_hz < b.frequency_hz; });
  return out;
}

struct DampingTarget {
  int mode = 0;  // index into the undamped ascending frequency list
  double zeta = 0;
};

struct CalibrationResult {
  VecX dampers;                  // per dof
  std::vector<double> achieved;  // zeta at each target mode
  int iterations = 0;
};

// Fits stiffness-proportional (one target) or Rayleigh-type mass+stiffness
// proportional (two targets) joint dampers so that the complex eigenanalysis
// of the linearized system reproduces the requested modal damping ratios
// within 1% relative.
inline CalibrationResult calibrate_joint_damping(const ChainModel& model,
                                                 const std::vector<DampingTarget>& targets,
                                                 const EnvironmentLoads& env,
                                                 const VecX& q_ref) {
  const int n = model.ndof();
  if (targets.empty() || targets.size() > 2)
    throw ConfigError("calibrate_joint_damping: need one or two targets");
  if (targets.size() == 2 && targets[0].mode == targets[1].mode)
    throw ConfigError("calibrate_joint_damping: targets must name distinct modes");
  for (const auto& t : targets)
    if (t.zeta < 0 || t.zeta >= 1 || t.mode < 0 || t.mode >= n)
      throw ConfigError("calibrate_joint_damping: invalid target");

  CalibrationResult result;
  result.dampers = VecX::Zero(n);
  bool all_zero = true;
  for (const auto& t : targets) all_zero = all_zero && t.zeta == 0;
  if (all_zero) {
    result.achieved.assign(targets.size(), 0.0);
    return result;
  }

  ChainModel base = model.with_joint_dampers(VecX::Zero(n));
  LinearizedSystem sys = linearize(base, q_ref, env);
  std::vector<double> f0 = eigenfrequencies(sys.M, sys.K);
  std::vector<double> omega;
  for (const auto& t : targets) {
    if (!(f0[t.mode] > 0))
      throw SolverError("calibrate_joint_damping: target mode has zero frequency");
    omega.push_back(2.0 * kPi * f0[t.mode]);
  }

  // Parameters: [alpha_K] or [a_M, a_K]; dampers on joint-cluster dofs only.
  VecX p;
  if (targets.size() == 1) {
    p = VecX::Constant(1, 2.0 * targets[0].zeta / omega[0]);
  } else {
    Eigen::Matrix2d a;
    a << 0.5 / omega[0], 0.5 * omega[0], 0.5 / omega[1], 0.5 * omega[1];
    Eigen::Vector2d z(targets[0].zeta, targets[1].zeta);
    Eigen::Vector2d am_ak = a.fullPivLu().solve(z);
    p = am_ak;
  }

  auto dampers_from = [&](const VecX& params) {
    VecX c = VecX::Zero(n);
    for (int k = 0; k < n; ++k) {
      if (model.dofs[k].cluster < 0) continue;
      double v = params.size() == 1
                     ? params[0] * model.dofs[k].spring_k
                     : params[0] * sys.M(k, k) + params[1] * model.dofs[k].spring_k;
      c[k] = v;
    }
    return c;
  };
  auto achieved_for = [&](const VecX& params, VecX& c_out) {
    c_out = dampers_from(params);
    for (int k = 0; k < n; ++k)
      if (c_out[k] < 0)
        throw SolverError("calibrate_joint_damping: targets need a negative damper");
    MatX C_total = sys.C;
    for (int k = 0; k < n; ++k) C_total(k, k) += c_out[k];
    std::vector<DampedMode> dm = damped_modes(sys.M, C_total, sys.K);
    std::vector<double> zeta;
    for (const auto& t : targets) {
      if (t.mode >= static_cast<int>(dm.size()))
        throw SolverError("calibrate_joint_damping: target mode overdamped");
      zeta.push_back(dm[t.mode].zeta);
    }
    return zeta;
  };

  if (dampers_from(p).minCoeff() < 0) {
    // Closed-form Rayleigh seed infeasible; restart from pure stiffness
    // proportionality fitted to the first target.
    p.setZero();
    p[p.size() - 1] = 2.0 * targets[0].zeta / omega[0];
  }

  auto unreachable = [&targets](const std::vector<double>& achieved) {
    std::string msg = "calibrate_joint_damping: targets unreachable; achieved";
    for (std::size_t i = 0; i < achieved.size(); ++i)
      msg += " zeta[" + std::to_string(targets[i].mode) + "]=" + format_double(achieved[i]);
    return SolverError(msg);
  };

  const int max_iters = 10;
  VecX c_now;
  std::vector<double> achieved;
  for (int iter = 1; iter <= max_iters; ++iter) {
    achieved = achieved_for(p, c_now);
    result.iterations = iter;
    bool ok = true;
    for (std::size_t i = 0; i < targets.size(); ++i)
      ok = ok && std::abs(achieved[i] - targets[i].zeta) <= 0.01 * targets[i].zeta;
    if (ok) {
      result.dampers = c_now;
      result.achieved = achieved;
      return result;
    }
    if (targets.size() == 1) {
      if (achieved[0] <= 0)
        throw SolverError("calibrate_joint_damping: no damping response at target mode");
      p[0] *= targets[0].zeta / achieved[0];
    } else {
      Eigen::Matrix2d jac;
      VecX c_tmp;
      for (int j = 0; j < 2; ++j) {
        VecX pp = p;
        double h = std::max(std::abs(p[j]) * 1e-3, 1e-12);
        pp[j] += h;
        std::vector<double> zp = achieved_for(pp, c_tmp);
        for (int i = 0; i < 2; ++i) jac(i, j) = (zp[i] - achieved[i]) / h;
      }
      Eigen::Vector2d err(achieved[0] - targets[0].zeta, achieved[1] - targets[1].zeta);
      Eigen::Vector2d dp = jac.fullPivLu().solve(err);
      if (!dp.allFinite())
        throw SolverError("calibrate_joint_damping: singular calibration Jacobian");
      // Backtrack steps that would drive a damper negative; a step pinned on
      // the feasibility boundary means the targets need a negative damper.
      double lambda = 1.0;
      bool stepped = false;
      for (int bt = 0; bt < 8 && !stepped; ++bt) {
        VecX p_try = p - lambda * VecX(dp);
        if (dampers_from(p_try).minCoeff() >= 0) {
          p = p_try;
          stepped = true;
        } else {
          lambda *= 0.5;
        }
      }
      if (!stepped) throw unreachable(achieved);
    }
  }
  throw unreachable(achieved);
}

// ---------------------------------------------------------------------------
// Internal loads

struct InternalMoment {
  Vec3 spring = Vec3::Zero();  // (bending x, bending y, torsion) spring torques
  Vec3 damper = Vec3::Zero();  // damper torques, reported separately
  int cluster = -1;
  double elevation = 0;
};

// Internal moment at the joint cluster nearest the requested elevation,
// K theta per axis (Kelvin-Voigt damper torque alongside).
inline InternalMoment internal_moment(const ChainModel& model, const SystemState& state,
                                      double elevation) {
  if (elevation < model.root_elevation - 1e-9)
    throw ConfigError("internal_moment: elevation below the structure root");
  if (elevation > model.top_elevation + 1e-9)
    throw ConfigError("internal_moment: elevation above the structure top");
  int best = 0;
  for (int c = 1; c < model.n_joints(); ++c)
    if (std::abs(model.clusters[c].elevation - elevation) <
        std::abs(model.clusters[best].elevation - elevation))
      best = c;
  InternalMoment out;
  out.cluster = best;
  out.elevation = model.clusters[best].elevation;
  const int k0 = model.clusters[best].dof_start;
  for (int a = 0; a < 3; ++a) {
    out.spring[a] = model.dofs[k0 + a].spring_k * state.q[k0 + a];
    out.damper[a] = model.dofs[k0 + a].damper_c * state.qd[k0 + a];
  }
  return out;
}

}  // namespace owtsim
