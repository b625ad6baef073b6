#include <gtest/gtest.h>

#include <cmath>

#include "regnet/decalib.hpp"
#include "regnet/training.hpp"
#include "support.hpp"

using namespace regnet;

namespace {

constexpr Representation kAll[] = {Representation::kEuler, Representation::kQuaternion,
                                   Representation::kDualQuaternion};

}  // namespace

TEST(DecalibRange, Validation) {
  EXPECT_NO_THROW((DecalibRange{0.0, 0.0}.validate()));
  EXPECT_NO_THROW((DecalibRange{1.5, 89.9}.validate()));
  EXPECT_THROW((DecalibRange{-0.1, 5.0}.validate()), Error);
  EXPECT_THROW((DecalibRange{0.1, 90.0}.validate()), Error);
  EXPECT_THROW((DecalibRange{0.1, -1.0}.validate()), Error);
}

TEST(DecalibRange, Parse) {
  EXPECT_EQ(parse_range("0.3,5"), (DecalibRange{0.3, 5.0}));
  EXPECT_THROW(parse_range("0.3"), Error);
  EXPECT_THROW(parse_range("a,5"), Error);
  EXPECT_THROW(parse_range("0.3,95"), Error);
}

TEST(Representation, WidthsAndNames) {
  EXPECT_EQ(representation_width(Representation::kEuler), 6);
  EXPECT_EQ(representation_width(Representation::kQuaternion), 7);
  EXPECT_EQ(representation_width(Representation::kDualQuaternion), 8);
  for (Representation r : kAll) EXPECT_EQ(parse_representation(representation_name(r)), r);
  EXPECT_THROW(parse_representation("matrix"), Error);
}

TEST(Encoding, RoundTripsEveryRepresentation) {
  Rng rng(21);
  const DecalibRange range{1.5, 20.0};
  for (Representation rep : kAll) {
    for (int i = 0; i < 500; ++i) {
      const RigidTransformd phi = sample_decalib(rng, range);
      const DecalibVector v = encode_decalib(phi, rep, range);
      EXPECT_LT(max_entry_error(decode_decalib(v, range), phi), 1e-12) << representation_name(rep);
    }
  }
}

TEST(Encoding, TargetsStayInTheirBounds) {
  Rng rng(22);
  const DecalibRange range{1.5, 20.0};
  for (int i = 0; i < 1000; ++i) {
    const RigidTransformd phi = sample_decalib(rng, range);
    const auto euler = encode_decalib(phi, Representation::kEuler, range).values;
    EXPECT_LE(euler.head<6>().cwiseAbs().maxCoeff(), 1.0 + 1e-12);
    const auto quat = encode_decalib(phi, Representation::kQuaternion, range).values;
    EXPECT_LE(quat.head<4>().cwiseAbs().maxCoeff(), kDefaultBalanceFactor + 1e-9);
    EXPECT_LE(quat.segment<3>(4).cwiseAbs().maxCoeff(), 1.0 + 1e-12);
    const auto dual = encode_decalib(phi, Representation::kDualQuaternion, range).values;
    EXPECT_LE(dual.head<4>().cwiseAbs().maxCoeff(), kDefaultBalanceFactor + 1e-9);
    EXPECT_LE(dual.segment<4>(4).cwiseAbs().maxCoeff(), 1.0 + 1e-12);
  }
}

TEST(Encoding, LayoutOfUnusedSlotsIsZero) {
  Rng rng(23);
  const DecalibRange range{0.5, 5.0};
  const RigidTransformd phi = sample_decalib(rng, range);
  const auto euler = encode_decalib(phi, Representation::kEuler, range).values;
  EXPECT_EQ(euler[6], 0.0);
  EXPECT_EQ(euler[7], 0.0);
  EXPECT_EQ(encode_decalib(phi, Representation::kQuaternion, range).values[7], 0.0);
}

TEST(Encoding, IdentityHasBalancedScalarSlot) {
  const DecalibRange range{0.3, 5.0};
  const auto v = encode_decalib(RigidTransformd::Identity(), Representation::kDualQuaternion, range, 100.0).values;
  EXPECT_EQ(v[0], 100.0);
  EXPECT_EQ(v.tail<7>().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Encoding, OutOfRangeIsRejected) {
  const DecalibRange range{0.1, 2.0};
  const RigidTransformd big_rotation = euler_to_transform(EulerPose<double>{deg2rad(3.0), 0.0, 0.0, {}});
  const RigidTransformd big_translation = RigidTransformd::Translation({0.0, 0.2, 0.0});
  for (Representation rep : kAll) {
    EXPECT_THROW(encode_decalib(big_rotation, rep, range), Error);
    EXPECT_THROW(encode_decalib(big_translation, rep, range), Error);
  }
}

TEST(Encoding, ZeroRangeEncodesZeroSlots) {
  const DecalibRange range{0.0, 0.0};
  const auto v = encode_decalib(RigidTransformd::Identity(), Representation::kEuler, range).values;
  EXPECT_EQ(v.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LT(max_entry_error(decode_decalib({v, Representation::kEuler}, range), RigidTransformd::Identity()), 1e-15);
}

TEST(Encoding, DegenerateQuaternionOutputIsAnError) {
  DecalibVector v;
  v.representation = Representation::kQuaternion;
  EXPECT_THROW(decode_decalib(v, {0.3, 5.0}), Error);
  v.values[0] = std::nan("");
  EXPECT_THROW(decode_decalib(v, {0.3, 5.0}), Error);
}

TEST(Sampling, ZeroRangeGivesIdentity) {
  Rng rng(1);
  EXPECT_EQ(max_entry_error(sample_decalib(rng, {0.0, 0.0}), RigidTransformd::Identity()), 0.0);
}

TEST(Sampling, ComponentsWithinBoundsAndCentered) {
  Rng rng(99);
  const DecalibRange range{1.5, 20.0};
  const int n = 10000;
  std::array<double, 6> sum{};
  for (int i = 0; i < n; ++i) {
    const RigidTransformd phi = sample_decalib(rng, range);
    const EulerPose<double> e = transform_to_euler(phi);
    const std::array<double, 6> c{e.yaw, e.pitch, e.roll, e.translation[0], e.translation[1], e.translation[2]};
    for (int k = 0; k < 6; ++k) {
      const double bound = k < 3 ? range.max_rotation_rad() : range.max_translation;
      EXPECT_LE(std::abs(c[k]), bound * (1 + 1e-12));
      sum[k] += c[k];
    }
  }
  for (int k = 0; k < 6; ++k) {
    const double bound = k < 3 ? range.max_rotation_rad() : range.max_translation;
    const double sigma_of_mean = bound / std::sqrt(3.0) / std::sqrt(static_cast<double>(n));
    EXPECT_LT(std::abs(sum[k] / n), 3.0 * sigma_of_mean) << "component " << k;
  }
}

TEST(Sampling, DeterministicPerSeed) {
  const DecalibRange range{0.3, 5.0};
  Rng a(17), b(17), c(18);
  const RigidTransformd x = sample_decalib(a, range);
  EXPECT_EQ(max_entry_error(x, sample_decalib(b, range)), 0.0);
  EXPECT_GT(max_entry_error(x, sample_decalib(c, range)), 0.0);
}

TEST(Composition, IdentityDecalibrationKeepsGroundTruth) {
  const RigidTransformd h_gt = SensorRig::default_lidar_to_camera();
  EXPECT_EQ(max_entry_error(make_initial(h_gt, RigidTransformd::Identity()), h_gt), 0.0);
}

TEST(Composition, RefinementLawRecoversGroundTruth) {
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const RigidTransformd h_gt = test::random_transform(rng, 180.0, 3.0);
    const RigidTransformd phi = test::random_transform(rng, 20.0, 1.5);
    EXPECT_LT(max_entry_error(compose(make_initial(h_gt, phi), invert(phi)), h_gt), 1e-12);
    EXPECT_LT(max_entry_error(apply_correction(make_initial(h_gt, phi), phi), h_gt), 1e-12);
  }
}

TEST(Composition, ResidualRecoversDecalibration) {
  Rng rng(6);
  for (int i = 0; i < 1000; ++i) {
    const RigidTransformd h_gt = test::random_transform(rng, 180.0, 3.0);
    const RigidTransformd phi = test::random_transform(rng, 20.0, 1.5);
    EXPECT_LT(max_entry_error(residual_decalib(make_initial(h_gt, phi), h_gt), phi), 1e-12);
  }
}

// ---------------------------------------------------------------------------
// Training samples

namespace {

Frame small_frame(std::uint64_t seed) {
  const SensorRig rig;
  return to_frame(make_frame(seed, SceneConfig{}, rig), rig);
}

}  // namespace

TEST(MakeSample, ZeroRangeTargetsIdentityAndUsesGroundTruthProjection) {
  const SensorRig rig;
  const Frame frame = small_frame(3);
  SampleSettings settings;
  settings.range = {0.0, 0.0};
  settings.representation = Representation::kEuler;
  const TrainingSample s = make_sample(frame, rig.lidar_to_camera, settings, 5);
  EXPECT_LT(max_entry_error(decode_decalib(s.target, settings.range), RigidTransformd::Identity()), 1e-15);
  const NetworkInputs truth = prepare_inputs(frame, rig.lidar_to_camera, settings.densify_kernel);
  EXPECT_TRUE((s.depth.channels[0] == truth.depth.channels[0]).all());
}

TEST(MakeSample, DecodedTargetRecoversGroundTruth) {
  const SensorRig rig;
  const Frame frame = small_frame(4);
  for (Representation rep : kAll) {
    SampleSettings settings;
    settings.representation = rep;
    for (int i = 0; i < 100; ++i) {
      const TrainingSample s = make_sample(frame, rig.lidar_to_camera, settings, 1000 + i);
      const RigidTransformd h = apply_correction(s.h_init, decode_decalib(s.target, settings.range));
      ASSERT_LT(max_entry_error(h, s.h_gt), 1e-9) << representation_name(rep) << " sample " << i;
    }
  }
}

TEST(MakeSample, LargeDecalibrationStillProducesASample) {
  const SensorRig rig;
  const Frame frame = small_frame(5);
  SampleSettings settings;
  settings.range = {1.5, 89.0};
  for (int i = 0; i < 20; ++i) {
    const TrainingSample s = make_sample(frame, rig.lidar_to_camera, settings, 77 + i);
    EXPECT_EQ(s.depth.channel_count(), 1);
    EXPECT_EQ(s.depth.height(), rig.camera.height);
  }
}

TEST(MakeSample, SyntheticSourceIsReproducible) {
  const SyntheticSampleSource a(SensorRig{}, SceneConfig{}, SampleSettings{}, 10, 20);
  const SyntheticSampleSource b(SensorRig{}, SceneConfig{}, SampleSettings{}, 10, 20);
  for (long i : {0L, 3L}) {
    const TrainingSample x = a.sample(i);
    const TrainingSample y = b.sample(i);
    EXPECT_EQ(x.target.values, y.target.values);
    EXPECT_TRUE((x.rgb.channels[1] == y.rgb.channels[1]).all());
    EXPECT_TRUE((x.depth.channels[0] == y.depth.channels[0]).all());
  }
  // Order does not matter.
  const TrainingSample later = a.sample(3);
  const TrainingSample earlier = b.sample(3);
  EXPECT_EQ(later.target.values, earlier.target.values);
}
