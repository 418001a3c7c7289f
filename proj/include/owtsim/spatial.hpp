#pragma once

#include <Eigen/Dense>

#include "owtsim/common.hpp"

namespace owtsim {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;  // [angular; linear]
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// Plucker transform from frame A to frame B: translate the origin by r (A
// coordinates), then rotate coordinates by E (E maps A-axes vectors into
// B-axes components).
struct SpatialTransform {
  Mat3 E = Mat3::Identity();
  Vec3 r = Vec3::Zero();

  static SpatialTransform translation(const Vec3& r) { return {Mat3::Identity(), r}; }
  static SpatialTransform rotation(const Mat3& E) { return {E, Vec3::Zero()}; }

  // Composition: (*this) after inner, mapping A -> C when inner maps A -> B.
  SpatialTransform compose(const SpatialTransform& inner) const {
    return {E * inner.E, inner.r + inner.E.transpose() * r};
  }

  Vec6 apply_motion(const Vec6& v) const {
    Vec6 out;
    out.head<3>() = E * v.head<3>();
    out.tail<3>() = E * (v.tail<3>() - r.cross(v.head<3>()));
    return out;
  }

  // Force transform from the B frame back to the A frame (the transpose map).
  Vec6 apply_force_to_parent(const Vec6& f) const {
    Vec6 out;
    Vec3 n = E.transpose() * f.head<3>();
    Vec3 lin = E.transpose() * f.tail<3>();
    out.head<3>() = n + r.cross(lin);
    out.tail<3>() = lin;
    return out;
  }
};

// v x m for motion vectors.
inline Vec6 cross_motion(const Vec6& v, const Vec6& m) {
  Vec6 out;
  out.head<3>() = v.head<3>().cross(m.head<3>());
  out.tail<3>() = v.head<3>().cross(m.tail<3>()) + v.tail<3>().cross(m.head<3>());
  return out;
}

// v x* f for force vectors.
inline Vec6 cross_force(const Vec6& v, const Vec6& f) {
  Vec6 out;
  out.head<3>() = v.head<3>().cross(f.head<3>()) + v.tail<3>().cross(f.tail<3>());
  out.tail<3>() = v.head<3>().cross(f.tail<3>());
  return out;
}

// Rigid-body inertia about the frame origin: mass m, first moment h = m*c,
// and rotational inertia I about the origin.
struct SpatialInertia {
  double m = 0;
  Vec3 h = Vec3::Zero();
  Mat3 I = Mat3::Zero();

  static SpatialInertia from_cm(double mass, const Vec3& cm, const Mat3& inertia_cm) {
    SpatialInertia si;
    si.m = mass;
    si.h = mass * cm;
    si.I = inertia_cm + mass * (cm.squaredNorm() * Mat3::Identity() - cm * cm.transpose());
    return si;
  }

  SpatialInertia& operator+=(const SpatialInertia& o) {
    m += o.m;
    h += o.h;
    I += o.I;
    return *this;
  }

  bool is_zero() const { return m == 0 && h.isZero(0.0) && I.isZero(0.0); }

  // Momentum-style product: I * v = [I w + h x v_lin; m v_lin - h x w].
  Vec6 apply(const Vec6& v) const {
    Vec6 out;
    out.head<3>() = I * v.head<3>() + h.cross(v.tail<3>());
    out.tail<3>() = m * v.tail<3>() - h.cross(v.head<3>());
    return out;
  }

  double kinetic_energy(const Vec6& v) const { return 0.5 * v.dot(apply(v)); }

  // Re-expresses the inertia in the parent frame A when this inertia lives in
  // frame B = X(A).
  SpatialInertia to_parent(const SpatialTransform& x) const {
    SpatialInertia out;
    out.m = m;
    if (m == 0) {
      out.I = x.E.transpose() * I * x.E;  // pure rotor inertia, none here
      return out;
    }
    Vec3 c_b = h / m;
    Vec3 c_a = x.r + x.E.transpose() * c_b;
    Mat3 I_cm = I - m * (c_b.squaredNorm() * Mat3::Identity() - c_b * c_b.transpose());
    Mat3 I_cm_a = x.E.transpose() * I_cm * x.E;
    out.h = m * c_a;
    out.I = I_cm_a + m * (c_a.squaredNorm() * Mat3::Identity() - c_a * c_a.transpose());
    return out;
  }
};

}  // namespace owtsim
