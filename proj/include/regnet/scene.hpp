#pragma once

// Procedural street-like scenes, a spinning multi-layer LiDAR model, and a
// Lambert-shaded pinhole renderer. Everything is ray cast against the same
// primitives, so both sensors observe identical geometry.
//
// Scene frame: z up, ground plane at z = 0. Boxes and walls stand on the
// ground inside x in [0, 40], y in [-20, 20], z in [0, 10].

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "regnet/projection.hpp"

namespace regnet {

/// Box rotated about the vertical axis. Faces are ordered +x, -x, +y, -y,
/// +z, -z in the box frame.
struct Box {
  Vector3<double> center = Vector3<double>::Zero();
  Vector3<double> half_extents = Vector3<double>::Ones();
  double yaw = 0.0;
  std::array<Vector3<double>, 6> face_albedo{};
};

/// Two-sided vertical rectangle. Its normal is (cos yaw, sin yaw, 0).
struct Wall {
  Vector3<double> center = Vector3<double>::Zero();
  double yaw = 0.0;
  double half_width = 1.0;
  double half_height = 1.0;
  Vector3<double> albedo = Vector3<double>::Constant(0.5);
};

struct Scene {
  std::uint64_t seed = 0;
  bool has_ground = true;
  Vector3<double> ground_albedo_a = Vector3<double>::Constant(0.35);
  Vector3<double> ground_albedo_b = Vector3<double>::Constant(0.5);
  double ground_tile = 2.0;
  std::vector<Box> boxes;
  std::vector<Wall> walls;

  int primitive_count() const { return static_cast<int>(boxes.size() + walls.size()); }
};

/// Ray hit. `surface` identifies the planar patch: 0 is the ground,
/// 8 * (primitive index + 1) + face for boxes and walls.
struct Hit {
  double t = 0.0;
  Vector3<double> normal = Vector3<double>::UnitZ();
  Vector3<double> albedo = Vector3<double>::Zero();
  int surface = -1;
};

inline constexpr int kGroundSurface = 0;
inline int surface_primitive(int surface) { return surface <= 0 ? -1 : surface / 8 - 1; }

/// Nearest hit with t in (epsilon, t_max]. `direction` need not be unit;
/// t is measured in multiples of it.
std::optional<Hit> cast_ray(const Scene& scene, const Vector3<double>& origin, const Vector3<double>& direction,
                            double t_max);

// Single-primitive intersections, exposed for oracles.
std::optional<Hit> intersect_ground(const Scene& scene, const Vector3<double>& origin,
                                    const Vector3<double>& direction);
std::optional<Hit> intersect_box(const Box& box, int index, const Vector3<double>& origin,
                                 const Vector3<double>& direction);
std::optional<Hit> intersect_wall(const Wall& wall, int index, const Vector3<double>& origin,
                                  const Vector3<double>& direction);

struct LidarModel {
  int layers = 16;
  double elevation_min_deg = -15.0;
  double elevation_max_deg = 3.0;
  double azimuth_step_deg = 0.5;
  double max_range = 40.0;
  /// Sensor-to-scene transform.
  RigidTransformd pose = RigidTransformd::Translation({0.0, 0.0, 1.73});
  double range_noise_std = 0.0;
  std::uint64_t noise_seed = 0;

  void validate() const;
  double elevation_deg(int layer) const;
  int azimuth_count() const;
};

struct LidarScan {
  PointCloud cloud;               // sensor frame
  std::vector<int> surfaces;      // surface id per point
};

LidarScan simulate_lidar(const Scene& scene, const LidarModel& model);

struct RenderResult {
  ImageTensor rgb;
  ImagePlane depth;  // camera-frame z of the first hit, 0 where the ray escapes
  Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> surfaces;  // -1 where the ray escapes
};

/// Lambert shading with a fixed directional light.
struct Lighting {
  Vector3<double> to_light = Vector3<double>(-0.3, 0.4, 1.0).normalized();
  double ambient = 0.3;
  Vector3<double> background = Vector3<double>(0.62, 0.72, 0.88);
};

/// `camera_pose` maps camera coordinates (x right, y down, z forward) into
/// the scene frame.
RenderResult render_camera(const Scene& scene, const RigidTransformd& camera_pose, const CameraIntrinsics& k,
                           const Lighting& lighting = {});

/// The LiDAR and camera mounting. `lidar_to_camera` is the ground-truth
/// extrinsic calibration.
struct SensorRig {
  CameraIntrinsics camera{128.0, 128.0, 127.5, 47.5, 256, 96};
  LidarModel lidar;
  RigidTransformd lidar_to_camera = default_lidar_to_camera();

  static RigidTransformd default_lidar_to_camera();
  RigidTransformd camera_pose() const { return lidar.pose * lidar_to_camera.inverse(); }
};

struct SceneConfig {
  int min_boxes = 5;
  int max_boxes = 10;
  int min_walls = 0;
  int max_walls = 2;
  int min_visible_primitives = 3;
  int min_visible_pixels = 20;
  int max_retries = 100;
};

/// Deterministic in (seed, config, rig). Retries with derived seeds until at
/// least `min_visible_primitives` primitives are visible to the camera.
Scene generate_scene(std::uint64_t seed, const SceneConfig& config = {}, const SensorRig& rig = {});

/// Distinct primitives covering at least `min_pixels` pixels.
int count_visible_primitives(const RenderResult& render, int min_pixels);

struct SyntheticFrame {
  Scene scene;
  LidarScan scan;
  RenderResult render;
};

SyntheticFrame make_frame(std::uint64_t seed, const SceneConfig& config, const SensorRig& rig);

}  // namespace regnet
