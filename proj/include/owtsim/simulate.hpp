#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "owtsim/dynamics.hpp"

namespace owtsim {

// Uniformly sampled multi-channel output.
struct TimeSeriesFrame {
  double t0 = 0;
  double dt = 0;  // output sample spacing
  std::vector<std::string> names;
  MatX data;  // rows = samples, cols = channels

  int n_samples() const { return static_cast<int>(data.rows()); }
  double time_at(int i) const { return t0 + i * dt; }

  int column_index(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    throw ConfigError("no channel named '" + name + "'");
  }
  VecX column(const std::string& name) const { return data.col(column_index(name)); }

  void to_csv(const std::string& path, const std::vector<std::string>& comments = {}) const {
    std::vector<std::string> header{"t_s"};
    header.insert(header.end(), names.begin(), names.end());
    std::vector<std::vector<double>> rows(n_samples());
    for (int i = 0; i < n_samples(); ++i) {
      rows[i].reserve(names.size() + 1);
      rows[i].push_back(time_at(i));
      for (int c = 0; c < data.cols(); ++c) rows[i].push_back(data(i, c));
    }
    write_csv(path, comments, header, rows);
  }
};

// One recordable quantity; parse from the channel-name grammar with
// channel_from_string.
struct ChannelRequest {
  enum class Kind { node_disp, node_acc, joint_angle, moment, soil_force };
  Kind kind = Kind::node_disp;
  int index = 0;         // node, joint, or soil-node index
  int component = 0;     // 0/1/2 = x/y/z
  double elevation = 0;  // moment channels
  std::string name;
};

// Grammar: node<i>.<ux|uy|uz|ax|ay|az>, joint<i>.<thx|thy|thz>,
// moment.<elev>m.<x|y>, soil<i>.<fx|fy>.
inline ChannelRequest channel_from_string(const ChainModel& model, const std::string& spec) {
  ChannelRequest req;
  req.name = spec;
  auto fail = [&](const std::string& why) {
    throw ConfigError("bad channel '" + spec + "': " + why);
  };
  auto parse_index = [&](std::size_t start, std::size_t end, int limit,
                         const char* what) -> int {
    if (end == std::string::npos || end <= start) fail("missing index");
    char* stop = nullptr;
    std::string digits = spec.substr(start, end - start);
    long v = std::strtol(digits.c_str(), &stop, 10);
    if (*stop != '\0') fail("bad index '" + digits + "'");
    if (v < 0 || v >= limit)
      fail(std::string(what) + " index out of range [0, " + std::to_string(limit) + ")");
    return static_cast<int>(v);
  };

  if (spec.rfind("node", 0) == 0) {
    std::size_t dot = spec.find('.');
    req.index = parse_index(4, dot, static_cast<int>(model.nodes.size()), "node");
    std::string comp = spec.substr(dot + 1);
    const char* names[] = {"ux", "uy", "uz", "ax", "ay", "az"};
    for (int i = 0; i < 6; ++i)
      if (comp == names[i]) {
        req.kind = i < 3 ? ChannelRequest::Kind::node_disp : ChannelRequest::Kind::node_acc;
        req.component = i % 3;
        return req;
      }
    fail("unknown component '" + comp + "'");
  }
  if (spec.rfind("joint", 0) == 0) {
    std::size_t dot = spec.find('.');
    req.index = parse_index(5, dot, model.n_joints(), "joint");
    std::string comp = spec.substr(dot + 1);
    const char* names[] = {"thx", "thy", "thz"};
    for (int i = 0; i < 3; ++i)
      if (comp == names[i]) {
        req.kind = ChannelRequest::Kind::joint_angle;
        req.component = i;
        return req;
      }
    fail("unknown component '" + comp + "'");
  }
  if (spec.rfind("moment.", 0) == 0) {
    std::size_t last = spec.rfind('.');
    if (last == 6) fail("expected moment.<elev>m.<x|y>");
    std::string mid = spec.substr(7, last - 7);
    std::string comp = spec.substr(last + 1);
    if (mid.empty() || mid.back() != 'm') fail("elevation must end in 'm'");
    mid.pop_back();
    char* stop = nullptr;
    req.elevation = std::strtod(mid.c_str(), &stop);
    if (stop == mid.c_str() || *stop != '\0') fail("bad elevation '" + mid + "'");
    if (req.elevation < model.root_elevation - 1e-9 ||
        req.elevation > model.top_elevation + 1e-9)
      fail("elevation outside the structure");
    if (comp == "x")
      req.component = 0;
    else if (comp == "y")
      req.component = 1;
    else
      fail("moment component must be x or y");
    req.kind = ChannelRequest::Kind::moment;
    return req;
  }
  if (spec.rfind("soil", 0) == 0) {
    std::size_t dot = spec.find('.');
    req.index =
        parse_index(4, dot, static_cast<int>(model.soil_nodes.size()), "soil node");
    std::string comp = spec.substr(dot + 1);
    if (comp == "fx")
      req.component = 0;
    else if (comp == "fy")
      req.component = 1;
    else
      fail("soil component must be fx or fy");
    req.kind = ChannelRequest::Kind::soil_force;
    return req;
  }
  fail("unknown channel kind");
  return req;  // unreachable
}

enum class Integrator { generalized_alpha, rk4 };

struct IntegratorConfig {
  Integrator method = Integrator::generalized_alpha;
  double rho_inf = 0.9;
  double newton_tol = 1e-8;  // times the characteristic torque max K * 1e-3
  int max_newton_iters = 20;
  int max_step_halvings = 8;
};

struct SimulateOptions {
  double t_start = 0;
  double t_end = 0;
  double dt = 0;
  IntegratorConfig integrator;
  int output_stride = 1;
  std::optional<SystemState> initial_state;
  // Called at every recorded sample with the full state and the accelerations
  // the integrator produced there (energy audits, custom probes).
  std::function<void(const SystemState&, const VecX&)> state_observer;
};

struct SimulationResult {
  TimeSeriesFrame frame;
  std::vector<std::string> warnings;
  long steps = 0;
  long newton_iterations = 0;
  long step_halvings = 0;
};

namespace detail {

struct GaCoeffs {
  double am, af, beta, gamma;

  explicit GaCoeffs(double rho_inf) {
    if (!(rho_inf >= 0 && rho_inf <= 1))
      throw ConfigError("generalized-alpha spectral radius must be in [0, 1]");
    am = (2.0 * rho_inf - 1.0) / (rho_inf + 1.0);
    af = rho_inf / (rho_inf + 1.0);
    gamma = 0.5 - am + af;
    beta = 0.25 * (1.0 - am + af) * (1.0 - am + af);
  }
};

// Cheap tangent stiffness/damping used only to precondition the per-step
// Newton solve: joint diagonals plus soil secant springs/dashpots.
inline void tangent_hint(const ChainModel& model, const Kinematics& kin, MatX& K, MatX& C) {
  const int n = model.ndof();
  K.setZero(n, n);
  C.setZero(n, n);
  for (int k = 0; k < n; ++k) {
    K(k, k) = model.dofs[k].spring_k;
    C(k, k) = model.dofs[k].damper_c;
  }
  if (model.soil_nodes.empty()) return;
  Jacobian3 J(3, n);
  for (const auto& node : model.soil_nodes) {
    const Vec3 pos = point_position(kin, node.link, node.offset);
    point_jacobian(model, kin, node.link, node.offset, J);
    const double depth = -node.cfg.elevation;
    for (int c = 0; c < 2; ++c) {
      double ks = secant_stiffness(model.soil_curves, depth, pos[c], node.cfg.strip_length);
      double cs = damping_coefficient(ks, node.cfg.beta_s, node.cfg.f_load);
      K.noalias() += ks * J.row(c).transpose() * J.row(c);
      C.noalias() += cs * J.row(c).transpose() * J.row(c);
    }
  }
}

struct GaStepper {
  const ChainModel& model;
  const EnvironmentLoads& env;
  GaCoeffs co;
  double tol_abs;
  int max_iters;

  VecX residual(const VecX& q_af, const VecX& v_af, double t_af, const VecX& a_am) const {
    Kinematics kin = compute_kinematics(model, q_af, v_af);
    return mass_matrix(model, kin) * a_am -
           generalized_forces(model, kin, t_af, env) + bias_torques(model, kin);
  }

  // One implicit step from (q, v, a) at time t with size h. Returns Newton
  // iterations used, or -1 on failure.
  int step(VecX& q, VecX& v, VecX& a, double t, double h) const {
    const int n = static_cast<int>(q.size());
    VecX a1 = a;  // predictor: previous acceleration
    auto q_of = [&](const VecX& an) {
      return VecX(q + h * v + h * h * ((0.5 - co.beta) * a + co.beta * an));
    };
    auto v_of = [&](const VecX& an) {
      return VecX(v + h * ((1.0 - co.gamma) * a + co.gamma * an));
    };
    const double t_af = t + (1.0 - co.af) * h;

    Kinematics kin_pred = compute_kinematics(model, q_of(a1), v_of(a1));
    MatX Kh(n, n), Ch(n, n);
    tangent_hint(model, kin_pred, Kh, Ch);
    MatX J = (1.0 - co.am) * mass_matrix(model, kin_pred) +
             (1.0 - co.af) * (co.gamma * h * Ch + co.beta * h * h * Kh);
    Eigen::LDLT<MatX> ldlt(J);
    if (ldlt.info() != Eigen::Success) return -1;

    for (int iter = 1; iter <= max_iters; ++iter) {
      VecX q1 = q_of(a1), v1 = v_of(a1);
      VecX q_af = (1.0 - co.af) * q1 + co.af * q;
      VecX v_af = (1.0 - co.af) * v1 + co.af * v;
      VecX a_am = (1.0 - co.am) * a1 + co.am * a;
      VecX r = residual(q_af, v_af, t_af, a_am);
      if (r.lpNorm<Eigen::Infinity>() <= tol_abs) {
        q = q1;
        v = v1;
        a = a1;
        return iter;
      }
      VecX da = ldlt.solve(-r);
      if (!da.allFinite()) return -1;
      a1 += da;
    }
    return -1;
  }
};

}  // namespace detail

inline SimulationResult simulate(const ChainModel& model, const EnvironmentLoads& env,
                                 const SimulateOptions& opt,
                                 const std::vector<ChannelRequest>& channels) {
  const int n = model.ndof();
  if (!(opt.dt > 0)) throw ConfigError("simulate: dt must be positive");
  if (!(opt.t_end > opt.t_start)) throw ConfigError("simulate: t_end must exceed t_start");
  if (opt.output_stride < 1) throw ConfigError("simulate: output_stride must be >= 1");
  const double span = opt.t_end - opt.t_start;
  const long n_steps = std::llround(span / opt.dt);
  if (n_steps < 1 || std::abs(n_steps * opt.dt - span) > 1e-6 * opt.dt)
    throw ConfigError("simulate: t_end - t_start must be a whole number of steps");

  SystemState state = opt.initial_state ? *opt.initial_state : SystemState::rest(model);
  if (state.q.size() != n || state.qd.size() != n)
    throw ConfigError("simulate: initial state size mismatch");
  state.t = opt.t_start;

  SimulationResult result;
  const long n_records = n_steps / opt.output_stride + 1;
  result.frame.t0 = opt.t_start;
  result.frame.dt = opt.dt * opt.output_stride;
  for (const auto& c : channels) result.frame.names.push_back(c.name);
  result.frame.data.resize(n_records, static_cast<int>(channels.size()));

  // Rest positions for displacement channels.
  Kinematics kin0 = compute_kinematics(model, VecX::Zero(n), VecX::Zero(n));
  std::vector<Vec3> rest(model.nodes.size());
  for (std::size_t i = 0; i < model.nodes.size(); ++i)
    rest[i] = point_position(kin0, model.nodes[i].link, model.nodes[i].offset);

  bool angle_warned = false;
  auto record = [&](long row, const VecX& qdd) {
    if (opt.state_observer) opt.state_observer(state, qdd);
    Kinematics kin = compute_kinematics(model, state.q, state.qd);
    std::optional<Accelerations> acc;
    for (std::size_t c = 0; c < channels.size(); ++c) {
      const ChannelRequest& req = channels[c];
      double v = 0;
      switch (req.kind) {
        case ChannelRequest::Kind::node_disp: {
          const OutputNode& node = model.nodes[req.index];
          v = (point_position(kin, node.link, node.offset) - rest[req.index])[req.component];
          break;
        }
        case ChannelRequest::Kind::node_acc: {
          if (!acc) acc = compute_accelerations(model, kin, qdd);
          const OutputNode& node = model.nodes[req.index];
          v = point_acceleration(kin, *acc, node.link, node.offset)[req.component];
          break;
        }
        case ChannelRequest::Kind::joint_angle:
          v = state.q[model.clusters[req.index].dof_start + req.component];
          break;
        case ChannelRequest::Kind::moment:
          v = internal_moment(model, state, req.elevation).spring[req.component];
          break;
        case ChannelRequest::Kind::soil_force: {
          const SoilBinding& node = model.soil_nodes[req.index];
          const Vec3 pos = point_position(kin, node.link, node.offset);
          const Vec3 vel = point_velocity(kin, node.link, node.offset);
          v = soil_reaction_force(model.soil_curves, node.cfg, pos[req.component],
                                  vel[req.component]);
          break;
        }
      }
      result.frame.data(row, static_cast<int>(c)) = v;
    }
  };
  auto check_angles = [&](double t) {
    if (angle_warned) return;
    for (int k = 0; k < n; ++k)
      if (model.dofs[k].type == DofType::revolute && std::abs(state.q[k]) >= 0.5 * kPi) {
        result.warnings.push_back("joint angle |q| >= pi/2 at t=" + format_double(t) +
                                  " (model validity exceeded)");
        angle_warned = true;
        return;
      }
  };

  if (opt.integrator.method == Integrator::rk4) {
    VecX qdd = forward_dynamics(model, state, env);
    record(0, qdd);
    long row = 1;
    const double h = opt.dt;
    for (long s = 0; s < n_steps; ++s) {
      const double t = opt.t_start + s * h;
      auto f = [&](double tt, const VecX& q, const VecX& v) {
        return forward_dynamics(model, SystemState{q, v, tt}, env);
      };
      VecX k1v = f(t, state.q, state.qd);
      VecX k1q = state.qd;
      VecX k2v = f(t + 0.5 * h, state.q + 0.5 * h * k1q, state.qd + 0.5 * h * k1v);
      VecX k2q = state.qd + 0.5 * h * k1v;
      VecX k3v = f(t + 0.5 * h, state.q + 0.5 * h * k2q, state.qd + 0.5 * h * k2v);
      VecX k3q = state.qd + 0.5 * h * k2v;
      VecX k4v = f(t + h, state.q + h * k3q, state.qd + h * k3v);
      VecX k4q = state.qd + h * k3v;
      state.q += h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
      state.qd += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
      state.t = opt.t_start + (s + 1) * h;
      ++result.steps;
      check_angles(state.t);
      if ((s + 1) % opt.output_stride == 0)
        record(row++, forward_dynamics(model, state, env));
    }
    return result;
  }

  detail::GaCoeffs co(opt.integrator.rho_inf);
  detail::GaStepper stepper{model, env, co,
                            opt.integrator.newton_tol * model.max_bending_k() * 1e-3,
                            opt.integrator.max_newton_iters};
  VecX a = forward_dynamics(model, state, env);
  record(0, a);
  long row = 1;

  // Advances one nominal step, recursively halving on Newton failure.
  std::function<void(double, double, int)> advance = [&](double t, double h, int depth) {
    VecX q_try = state.q, v_try = state.qd, a_try = a;
    int iters = stepper.step(q_try, v_try, a_try, t, h);
    if (iters < 0) {
      if (depth >= opt.integrator.max_step_halvings) {
        VecX r = stepper.residual(state.q, state.qd, t, a);
        throw SolverError("simulate: Newton divergence at t=" + format_double(t) +
                          " after " + std::to_string(depth) +
                          " halvings (h=" + format_double(h) +
                          ", |r|=" + format_double(r.lpNorm<Eigen::Infinity>()) + ")");
      }
      if (depth == 0) {
        result.warnings.push_back("step halving engaged at t=" + format_double(t));
      }
      ++result.step_halvings;
      advance(t, 0.5 * h, depth + 1);
      advance(t + 0.5 * h, 0.5 * h, depth + 1);
      return;
    }
    result.newton_iterations += iters;
    state.q = q_try;
    state.qd = v_try;
    a = a_try;
  };

  for (long s = 0; s < n_steps; ++s) {
    advance(opt.t_start + s * opt.dt, opt.dt, 0);
    state.t = opt.t_start + (s + 1) * opt.dt;
    ++result.steps;
    check_angles(state.t);
    // Report the physical acceleration at the new state, not the algorithmic
    // acceleration variable (they differ on numerically damped modes).
    if ((s + 1) % opt.output_stride == 0)
      record(row++, forward_dynamics(model, state, env));
  }
  return result;
}

}  // namespace owtsim
