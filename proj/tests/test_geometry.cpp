#include <gtest/gtest.h>

#include "regnet/geometry.hpp"
#include "support.hpp"

using namespace regnet;

TEST(RigidTransform, ComposeAppliesRightOperandFirst) {
  const RigidTransformd a(euler_to_rotation(0.3, -0.2, 0.1), {1, 2, 3});
  const RigidTransformd b(euler_to_rotation(-0.1, 0.4, 0.2), {-0.5, 0.25, 2});
  const Vector3<double> x(0.7, -1.1, 4.0);
  EXPECT_LT((compose(a, b) * x - a * (b * x)).norm(), 1e-12);
}

TEST(RigidTransform, InverseIsExactUpToRounding) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const RigidTransformd h = test::random_transform(rng, 3.0, 5.0);
    EXPECT_LT(max_entry_error(h * invert(h), RigidTransformd::Identity()), 1e-14);
    EXPECT_LT(max_entry_error(invert(h) * h, RigidTransformd::Identity()), 1e-14);
  }
}

TEST(RigidTransform, ValidityRejectsNonOrthonormal) {
  Matrix3<double> r = Matrix3<double>::Identity();
  r(0, 1) = 0.01;
  EXPECT_FALSE(RigidTransformd(r, Vector3<double>::Zero()).is_valid());
  EXPECT_TRUE(RigidTransformd(orthonormalize(r), Vector3<double>::Zero()).is_valid(1e-12));
  Matrix3<double> reflect = Matrix3<double>::Identity();
  reflect(2, 2) = -1;
  EXPECT_FALSE(RigidTransformd(reflect, Vector3<double>::Zero()).is_valid());
}

TEST(Orthonormalize, IsNearestRotationForSmallPerturbation) {
  Rng rng(8);
  const Matrix3<double> r = euler_to_rotation(0.4, 0.1, -0.7);
  Matrix3<double> noisy = r;
  for (int i = 0; i < 9; ++i) noisy.data()[i] += 1e-6 * gaussian(rng);
  const Matrix3<double> fixed = orthonormalize(noisy);
  EXPECT_LT((fixed.transpose() * fixed - Matrix3<double>::Identity()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(fixed.determinant(), 1.0, 1e-14);
  EXPECT_LT((fixed - r).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Euler, KnownRotationAboutZ) {
  const RigidTransformd h = euler_to_transform(EulerPose<double>{deg2rad(30.0), 0.0, 0.0, {}});
  const Vector3<double> x = h * Vector3<double>(1, 0, 0);
  EXPECT_NEAR(x[0], std::cos(deg2rad(30.0)), 1e-15);
  EXPECT_NEAR(x[1], std::sin(deg2rad(30.0)), 1e-15);
  EXPECT_NEAR(x[2], 0.0, 1e-15);
}

TEST(Euler, RoundTripsAwayFromGimbalLock) {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const EulerPose<double> p{uniform(rng, -3.0, 3.0), uniform(rng, -1.5, 1.5), uniform(rng, -3.0, 3.0),
                              {uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)}};
    const EulerPose<double> q = transform_to_euler(euler_to_transform(p));
    EXPECT_NEAR(p.yaw, q.yaw, 1e-9);
    EXPECT_NEAR(p.pitch, q.pitch, 1e-9);
    EXPECT_NEAR(p.roll, q.roll, 1e-9);
  }
}

TEST(Euler, GimbalLockSetsRollToZeroAndKeepsTheMatrix) {
  for (double sign : {1.0, -1.0}) {
    const RigidTransformd h = euler_to_transform(EulerPose<double>{0.4, sign * kPi<double> / 2, 0.3, {}});
    const EulerPose<double> e = transform_to_euler(h);
    EXPECT_EQ(e.roll, 0.0);
    EXPECT_LT(max_entry_error(euler_to_transform(e), h), 1e-9);
  }
}

TEST(Euler, AnglesWrapIntoHalfOpenInterval) {
  const EulerPose<double> e = transform_to_euler(euler_to_transform(EulerPose<double>{kPi<double>, 0.0, 0.0, {}}));
  EXPECT_GT(e.yaw, -kPi<double>);
  EXPECT_LE(e.yaw, kPi<double>);
  EXPECT_NEAR(std::abs(e.yaw), kPi<double>, 1e-12);
}

TEST(Quaternion, CanonicalSignMakesScalarNonNegative) {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const RigidTransformd h = test::random_transform(rng, 170.0, 1.0);
    const Vector4<double> q = transform_to_quat(h).quaternion;
    EXPECT_NEAR(q.norm(), 1.0, 1e-14);
    EXPECT_GE(q[0], 0.0);
  }
  const Vector4<double> half_turn = canonical_sign<double>(Vector4<double>(0, -1, 0, 0));
  EXPECT_EQ(half_turn, Vector4<double>(0, 1, 0, 0));
}

TEST(Quaternion, DegenerateNormIsRejected) {
  EXPECT_THROW(transform_from_quat(QuatPose<double>{Vector4<double>::Zero(), Vector3<double>::Zero()}), Error);
}

TEST(Quaternion, UnnormalizedInputIsNormalized) {
  const RigidTransformd h(euler_to_rotation(0.2, 0.1, -0.3), {1, 2, 3});
  QuatPose<double> q = transform_to_quat(h);
  q.quaternion *= 7.5;
  EXPECT_LT(max_entry_error(transform_from_quat(q), h), 1e-14);
}

TEST(DualQuaternion, DualPartIsHalfTranslationTimesReal) {
  const RigidTransformd h(euler_to_rotation(0.3, -0.1, 0.2), {0.5, -1.0, 2.0});
  const DualQuaternion<double> d = dualquat_from_transform(h);
  const Vector4<double> t(0, 0.5, -1.0, 2.0);
  EXPECT_LT((d.dual - 0.5 * quat_multiply<double>(t, d.real)).norm(), 1e-15);
  EXPECT_NEAR(d.real.dot(d.dual), 0.0, 1e-15);
}

TEST(DualQuaternion, PureTranslation) {
  const DualQuaternion<double> d = dualquat_from_transform(RigidTransformd::Translation({2, 4, 6}));
  EXPECT_EQ(d.real, Vector4<double>(1, 0, 0, 0));
  EXPECT_LT((d.dual - Vector4<double>(0, 1, 2, 3)).norm(), 1e-15);
}

TEST(DualQuaternion, DecodingProjectsOutDualComponentAlongReal) {
  const RigidTransformd h(euler_to_rotation(0.3, -0.1, 0.2), {0.5, -1.0, 2.0});
  DualQuaternion<double> d = dualquat_from_transform(h);
  d.dual += 0.01 * d.real;  // violates the unit dual quaternion constraint
  EXPECT_LT(max_entry_error(transform_from_dualquat(d), h), 1e-12);
}

TEST(DualQuaternion, RoundTripsRandomTransforms) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const RigidTransformd h = test::random_transform(rng, 60.0, 3.0);
    EXPECT_LT(max_entry_error(transform_from_dualquat(dualquat_from_transform(h)), h), 1e-12);
  }
}
