#pragma once

// Shared fixtures for the test suites.

#include <filesystem>
#include <string>

#include "regnet/common.hpp"
#include "regnet/geometry.hpp"
#include "regnet/model.hpp"
#include "regnet/scene.hpp"

namespace regnet::test {

/// Uniform Euler angles within +-max_deg and translations within +-max_t.
inline RigidTransformd random_transform(Rng& rng, double max_deg, double max_t) {
  const double a = deg2rad(max_deg);
  return euler_to_transform(EulerPose<double>{uniform(rng, -a, a), uniform(rng, -a, a), uniform(rng, -a, a),
                                              {uniform(rng, -max_t, max_t), uniform(rng, -max_t, max_t),
                                               uniform(rng, -max_t, max_t)}});
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("regnet_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// A 32 x 24 camera on the default LiDAR mounting, for fast tests.
inline SensorRig small_rig() {
  SensorRig rig;
  rig.camera = CameraIntrinsics{16.0, 16.0, 15.5, 11.5, 32, 24};
  return rig;
}

inline SceneConfig small_scene() {
  SceneConfig c;
  c.min_visible_pixels = 3;
  return c;
}

/// A one-block-per-stream network sized for small_rig().
inline RegNetConfig tiny_model(Representation rep = Representation::kDualQuaternion) {
  RegNetConfig c;
  c.input_height = 24;
  c.input_width = 32;
  c.rgb_stream = {{3, 2, {6, 6}}};
  c.depth_stream = {{3, 2, {3, 3}}};
  c.fusion_stack = {{3, 1, {8, 8}}};
  c.fc_hidden = 16;
  c.representation = rep;
  return c;
}

}  // namespace regnet::test
