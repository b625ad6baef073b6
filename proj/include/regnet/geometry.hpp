#pragma once

// Rigid-motion algebra and pose representations.
//
// Conventions used everywhere in the project:
//  * Euler angles are intrinsic ZYX: R = Rz(yaw) * Ry(pitch) * Rx(roll).
//  * Quaternions are scalar-first (w, x, y, z) and sign-canonical (w >= 0).
//  * Dual quaternions are (p, q) with q = 1/2 * (0, t) (x) p.

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>

#include "regnet/common.hpp"

namespace regnet {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Vector4 = Eigen::Matrix<Scalar, 4, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Matrix4 = Eigen::Matrix<Scalar, 4, 4>;

/// Rotation R and translation t acting as x -> R x + t.
template <typename Scalar>
class RigidTransform {
 public:
  RigidTransform() : rotation_(Matrix3<Scalar>::Identity()), translation_(Vector3<Scalar>::Zero()) {}
  RigidTransform(const Matrix3<Scalar>& rotation, const Vector3<Scalar>& translation)
      : rotation_(rotation), translation_(translation) {}

  static RigidTransform Identity() { return {}; }
  static RigidTransform Translation(const Vector3<Scalar>& t) { return {Matrix3<Scalar>::Identity(), t}; }
  static RigidTransform Rotation(const Matrix3<Scalar>& r) { return {r, Vector3<Scalar>::Zero()}; }

  /// Takes the upper 3x4 block of a homogeneous matrix. No orthonormality check.
  static RigidTransform FromMatrix(const Matrix4<Scalar>& m) {
    return {m.template topLeftCorner<3, 3>(), m.template topRightCorner<3, 1>()};
  }

  const Matrix3<Scalar>& rotation() const { return rotation_; }
  const Vector3<Scalar>& translation() const { return translation_; }

  Matrix4<Scalar> matrix() const {
    Matrix4<Scalar> m = Matrix4<Scalar>::Identity();
    m.template topLeftCorner<3, 3>() = rotation_;
    m.template topRightCorner<3, 1>() = translation_;
    return m;
  }

  Vector3<Scalar> operator*(const Vector3<Scalar>& x) const { return rotation_ * x + translation_; }

  RigidTransform operator*(const RigidTransform& rhs) const {
    return {rotation_ * rhs.rotation_, rotation_ * rhs.translation_ + translation_};
  }

  /// Closed form (R^T, -R^T t); never a general 4x4 inverse.
  RigidTransform inverse() const {
    const Matrix3<Scalar> rt = rotation_.transpose();
    return {rt, -(rt * translation_)};
  }

  /// Largest deviation of R^T R from identity and of det R from one.
  Scalar orthonormality_error() const {
    const Scalar ortho = (rotation_.transpose() * rotation_ - Matrix3<Scalar>::Identity()).cwiseAbs().maxCoeff();
    return std::max(ortho, std::abs(rotation_.determinant() - Scalar(1)));
  }

  bool is_valid(Scalar tol = Scalar(1e-9)) const {
    return rotation_.allFinite() && translation_.allFinite() && orthonormality_error() <= tol;
  }

  template <typename Other>
  RigidTransform<Other> cast() const {
    return {rotation_.template cast<Other>(), translation_.template cast<Other>()};
  }

 private:
  Matrix3<Scalar> rotation_;
  Vector3<Scalar> translation_;
};

using RigidTransformd = RigidTransform<double>;

template <typename Scalar>
RigidTransform<Scalar> compose(const RigidTransform<Scalar>& a, const RigidTransform<Scalar>& b) {
  return a * b;
}

template <typename Scalar>
RigidTransform<Scalar> invert(const RigidTransform<Scalar>& h) {
  return h.inverse();
}

template <typename Scalar>
Vector3<Scalar> apply_point(const RigidTransform<Scalar>& h, const Vector3<Scalar>& x) {
  return h * x;
}

/// Largest absolute entry difference of the two homogeneous matrices.
template <typename Scalar>
Scalar max_entry_error(const RigidTransform<Scalar>& a, const RigidTransform<Scalar>& b) {
  return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

/// Nearest rotation in the Frobenius sense (polar decomposition via SVD).
template <typename Derived>
Matrix3<typename Derived::Scalar> orthonormalize(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  Eigen::JacobiSVD<Matrix3<Scalar>> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3<Scalar> d = Matrix3<Scalar>::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? Scalar(-1) : Scalar(1);
  return svd.matrixU() * d * svd.matrixV().transpose();
}

// ---------------------------------------------------------------------------
// Euler angles

template <typename Scalar>
struct EulerPose {
  Scalar yaw = 0;
  Scalar pitch = 0;
  Scalar roll = 0;
  Vector3<Scalar> translation = Vector3<Scalar>::Zero();
};

template <typename Scalar>
Matrix3<Scalar> euler_to_rotation(Scalar yaw, Scalar pitch, Scalar roll) {
  using Axis = Eigen::AngleAxis<Scalar>;
  return (Axis(yaw, Vector3<Scalar>::UnitZ()) * Axis(pitch, Vector3<Scalar>::UnitY()) *
          Axis(roll, Vector3<Scalar>::UnitX()))
      .toRotationMatrix();
}

template <typename Scalar>
RigidTransform<Scalar> euler_to_transform(const EulerPose<Scalar>& pose) {
  return {euler_to_rotation(pose.yaw, pose.pitch, pose.roll), pose.translation};
}

namespace detail {
template <typename Scalar>
Scalar wrap_half_open(Scalar a) {
  // atan2 may return -pi; the canonical interval is (-pi, pi].
  return a <= -kPi<Scalar> ? a + 2 * kPi<Scalar> : a;
}
}  // namespace detail

/// Canonical ZYX decomposition. Within 1e-7 of pitch = +-pi/2 the roll is
/// pinned to zero and yaw takes the remaining free angle.
template <typename Scalar>
EulerPose<Scalar> transform_to_euler(const RigidTransform<Scalar>& h) {
  const Matrix3<Scalar>& r = h.rotation();
  EulerPose<Scalar> pose;
  pose.translation = h.translation();
  pose.pitch = std::atan2(-r(2, 0), std::hypot(r(0, 0), r(1, 0)));
  if (kPi<Scalar> / 2 - std::abs(pose.pitch) < Scalar(1e-7)) {
    pose.roll = 0;
    pose.yaw = detail::wrap_half_open(std::atan2(-r(0, 1), r(1, 1)));
  } else {
    pose.yaw = detail::wrap_half_open(std::atan2(r(1, 0), r(0, 0)));
    pose.roll = detail::wrap_half_open(std::atan2(r(2, 1), r(2, 2)));
  }
  return pose;
}

// ---------------------------------------------------------------------------
// Quaternions (scalar-first 4-vectors)

template <typename Scalar>
Vector4<Scalar> quat_multiply(const Vector4<Scalar>& a, const Vector4<Scalar>& b) {
  return {a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
          a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
          a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
          a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]};
}

template <typename Scalar>
Vector4<Scalar> quat_conjugate(const Vector4<Scalar>& a) {
  return {a[0], -a[1], -a[2], -a[3]};
}

/// Flips the sign so the scalar part is positive; for w == 0 the first
/// nonzero vector component is made positive.
template <typename Scalar>
Vector4<Scalar> canonical_sign(const Vector4<Scalar>& q) {
  for (int i = 0; i < 4; ++i) {
    if (q[i] > 0) return q;
    if (q[i] < 0) return -q;
  }
  return q;
}

template <typename Scalar>
Vector4<Scalar> rotation_to_quat(const Matrix3<Scalar>& r) {
  const Eigen::Quaternion<Scalar> e(r);
  Vector4<Scalar> q(e.w(), e.x(), e.y(), e.z());
  return canonical_sign<Scalar>(q.normalized());
}

template <typename Scalar>
Matrix3<Scalar> quat_to_rotation(const Vector4<Scalar>& q) {
  return Eigen::Quaternion<Scalar>(q[0], q[1], q[2], q[3]).toRotationMatrix();
}

template <typename Scalar>
struct QuatPose {
  Vector4<Scalar> quaternion = Vector4<Scalar>(1, 0, 0, 0);
  Vector3<Scalar> translation = Vector3<Scalar>::Zero();
};

template <typename Scalar>
QuatPose<Scalar> transform_to_quat(const RigidTransform<Scalar>& h) {
  return {rotation_to_quat(h.rotation()), h.translation()};
}

/// Renormalizes the quaternion; throws "degenerate rotation" when it is ~0.
template <typename Scalar>
RigidTransform<Scalar> transform_from_quat(const QuatPose<Scalar>& pose) {
  const Scalar n = pose.quaternion.norm();
  if (!(n >= Scalar(1e-6))) throw Error("degenerate rotation");
  return {quat_to_rotation<Scalar>(pose.quaternion / n), pose.translation};
}

// ---------------------------------------------------------------------------
// Dual quaternions

template <typename Scalar>
struct DualQuaternion {
  Vector4<Scalar> real = Vector4<Scalar>(1, 0, 0, 0);  // p
  Vector4<Scalar> dual = Vector4<Scalar>::Zero();      // q
};

template <typename Scalar>
DualQuaternion<Scalar> dualquat_from_transform(const RigidTransform<Scalar>& h) {
  DualQuaternion<Scalar> d;
  d.real = rotation_to_quat(h.rotation());
  const Vector4<Scalar> t(0, h.translation()[0], h.translation()[1], h.translation()[2]);
  d.dual = Scalar(0.5) * quat_multiply<Scalar>(t, d.real);
  return d;
}

/// Inverse of dualquat_from_transform. The input is projected back onto the
/// unit dual quaternions first: p is normalized and the component of q along
/// p is removed.
template <typename Scalar>
RigidTransform<Scalar> transform_from_dualquat(const DualQuaternion<Scalar>& d) {
  const Scalar n = d.real.norm();
  if (!(n >= Scalar(1e-6))) throw Error("degenerate rotation");
  const Vector4<Scalar> p = d.real / n;
  Vector4<Scalar> q = d.dual / n;
  q -= p.dot(q) * p;
  const Vector4<Scalar> t = Scalar(2) * quat_multiply<Scalar>(q, quat_conjugate<Scalar>(p));
  return {quat_to_rotation<Scalar>(p), t.template tail<3>()};
}

}  // namespace regnet
