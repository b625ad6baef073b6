#include "regnet/scene.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace regnet {

namespace {

constexpr double kRayEpsilon = 1e-9;

Matrix3<double> yaw_rotation(double yaw) {
  return Eigen::AngleAxisd(yaw, Vector3<double>::UnitZ()).toRotationMatrix();
}

Vector3<double> random_albedo(Rng& rng) {
  return {uniform(rng, 0.1, 0.95), uniform(rng, 0.1, 0.95), uniform(rng, 0.1, 0.95)};
}

// Conservative bounding-sphere rejection: true when the ray cannot reach the
// sphere before `best_t`.
bool sphere_rejects(const Vector3<double>& center, double radius, const Vector3<double>& origin,
                    const Vector3<double>& direction, double best_t) {
  const Vector3<double> oc = center - origin;
  const double dd = direction.squaredNorm();
  const double along = oc.dot(direction) / dd;
  const double dist2 = oc.squaredNorm() - along * along * dd;
  const double r = radius * (1.0 + 1e-9) + 1e-9;
  if (dist2 > r * r) return true;
  const double half_chord = std::sqrt(std::max(0.0, (r * r - dist2) / dd));
  return along + half_chord < kRayEpsilon || along - half_chord > best_t;
}

void keep_nearest(std::optional<Hit>& best, std::optional<Hit> candidate) {
  if (candidate && (!best || candidate->t < best->t)) best = candidate;
}

}  // namespace

std::optional<Hit> intersect_ground(const Scene& scene, const Vector3<double>& origin,
                                    const Vector3<double>& direction) {
  if (!scene.has_ground || !(direction.z() < 0.0) || !(origin.z() > 0.0)) return std::nullopt;
  const double t = -origin.z() / direction.z();
  if (!(t > kRayEpsilon)) return std::nullopt;
  const Vector3<double> p = origin + t * direction;
  const auto ix = static_cast<long long>(std::floor(p.x() / scene.ground_tile));
  const auto iy = static_cast<long long>(std::floor(p.y() / scene.ground_tile));
  Hit hit;
  hit.t = t;
  hit.normal = Vector3<double>::UnitZ();
  hit.albedo = ((ix + iy) % 2 == 0) ? scene.ground_albedo_a : scene.ground_albedo_b;
  hit.surface = kGroundSurface;
  return hit;
}

std::optional<Hit> intersect_box(const Box& box, int index, const Vector3<double>& origin,
                                 const Vector3<double>& direction) {
  const Matrix3<double> rot = yaw_rotation(box.yaw);
  const Vector3<double> o = rot.transpose() * (origin - box.center);
  const Vector3<double> d = rot.transpose() * direction;
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  int face = -1;
  for (int axis = 0; axis < 3; ++axis) {
    const double h = box.half_extents[axis];
    if (d[axis] == 0.0) {
      if (o[axis] < -h || o[axis] > h) return std::nullopt;
      continue;
    }
    double t0 = (-h - o[axis]) / d[axis];
    double t1 = (h - o[axis]) / d[axis];
    // Entering through the -axis face when moving in +axis direction.
    int entry_face = 2 * axis + (d[axis] > 0.0 ? 1 : 0);
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > t_near) {
      t_near = t0;
      face = entry_face;
    }
    t_far = std::min(t_far, t1);
  }
  // Origins inside the box are treated as misses.
  if (face < 0 || t_near > t_far || !(t_near > kRayEpsilon)) return std::nullopt;
  Vector3<double> local_normal = Vector3<double>::Zero();
  local_normal[face / 2] = (face % 2 == 0) ? 1.0 : -1.0;
  Hit hit;
  hit.t = t_near;
  hit.normal = rot * local_normal;
  hit.albedo = box.face_albedo[face];
  hit.surface = 8 * (index + 1) + face;
  return hit;
}

std::optional<Hit> intersect_wall(const Wall& wall, int index, const Vector3<double>& origin,
                                  const Vector3<double>& direction) {
  const Vector3<double> n(std::cos(wall.yaw), std::sin(wall.yaw), 0.0);
  const double denom = n.dot(direction);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const double t = n.dot(wall.center - origin) / denom;
  if (!(t > kRayEpsilon)) return std::nullopt;
  const Vector3<double> local = origin + t * direction - wall.center;
  const Vector3<double> along(-std::sin(wall.yaw), std::cos(wall.yaw), 0.0);
  if (std::abs(local.dot(along)) > wall.half_width || std::abs(local.z()) > wall.half_height) return std::nullopt;
  Hit hit;
  hit.t = t;
  hit.normal = denom > 0.0 ? Vector3<double>(-n) : n;
  hit.albedo = wall.albedo;
  hit.surface = 8 * (index + 1) + (denom > 0.0 ? 1 : 0);
  return hit;
}

std::optional<Hit> cast_ray(const Scene& scene, const Vector3<double>& origin, const Vector3<double>& direction,
                            double t_max) {
  std::optional<Hit> best = intersect_ground(scene, origin, direction);
  auto bound = [&] { return best ? std::min(best->t, t_max) : t_max; };
  const int nboxes = static_cast<int>(scene.boxes.size());
  for (int i = 0; i < nboxes; ++i) {
    const Box& b = scene.boxes[i];
    if (sphere_rejects(b.center, b.half_extents.norm(), origin, direction, bound())) continue;
    keep_nearest(best, intersect_box(b, i, origin, direction));
  }
  for (int i = 0; i < static_cast<int>(scene.walls.size()); ++i) {
    const Wall& w = scene.walls[i];
    if (sphere_rejects(w.center, std::hypot(w.half_width, w.half_height), origin, direction, bound())) continue;
    keep_nearest(best, intersect_wall(w, nboxes + i, origin, direction));
  }
  if (best && best->t > t_max) return std::nullopt;
  return best;
}

void LidarModel::validate() const {
  if (layers < 4) throw Error("lidar model: at least 4 layers required");
  if (!(max_range > 1.0)) throw Error("lidar model: max range must exceed 1 m");
  if (!(azimuth_step_deg > 0.0)) throw Error("lidar model: azimuth step must be positive");
  if (!(elevation_max_deg >= elevation_min_deg)) throw Error("lidar model: empty elevation range");
}

double LidarModel::elevation_deg(int layer) const {
  return elevation_min_deg + (elevation_max_deg - elevation_min_deg) * layer / (layers - 1);
}

int LidarModel::azimuth_count() const { return static_cast<int>(std::lround(360.0 / azimuth_step_deg)); }

LidarScan simulate_lidar(const Scene& scene, const LidarModel& model) {
  model.validate();
  const int naz = model.azimuth_count();
  std::vector<Vector3<double>> points;
  std::vector<double> intensity;
  LidarScan scan;
  Rng noise(model.noise_seed);
  const Vector3<double> origin = model.pose.translation();
  for (int layer = 0; layer < model.layers; ++layer) {
    const double el = deg2rad(model.elevation_deg(layer));
    for (int a = 0; a < naz; ++a) {
      const double az = deg2rad(a * model.azimuth_step_deg);
      const Vector3<double> dir(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      const auto hit = cast_ray(scene, origin, model.pose.rotation() * dir, model.max_range);
      if (!hit) continue;
      double range = hit->t;
      if (model.range_noise_std > 0.0) range += model.range_noise_std * gaussian(noise);
      points.push_back(range * dir);
      intensity.push_back(hit->albedo.mean());
      scan.surfaces.push_back(hit->surface);
    }
  }
  scan.cloud.points.resize(3, static_cast<Eigen::Index>(points.size()));
  scan.cloud.intensity.resize(static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    scan.cloud.points.col(static_cast<Eigen::Index>(i)) = points[i];
    scan.cloud.intensity[static_cast<Eigen::Index>(i)] = intensity[i];
  }
  return scan;
}

RenderResult render_camera(const Scene& scene, const RigidTransformd& camera_pose, const CameraIntrinsics& k,
                           const Lighting& lighting) {
  k.validate();
  RenderResult out;
  out.rgb.kind = ImageKind::kRgb;
  out.rgb.channels.assign(3, ImagePlane::Zero(k.height, k.width));
  out.depth = ImagePlane::Zero(k.height, k.width);
  out.surfaces.setConstant(k.height, k.width, -1);
  const Vector3<double> origin = camera_pose.translation();
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const Vector3<double> ray_cam((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
      const auto hit = cast_ray(scene, origin, camera_pose.rotation() * ray_cam,
                                std::numeric_limits<double>::infinity());
      Vector3<double> color = lighting.background;
      if (hit) {
        const double shade = lighting.ambient + (1.0 - lighting.ambient) * std::max(0.0, hit->normal.dot(lighting.to_light));
        color = hit->albedo * shade;
        out.depth(v, u) = hit->t;
        out.surfaces(v, u) = hit->surface;
      }
      for (int c = 0; c < 3; ++c) out.rgb.channels[c](v, u) = color[c];
    }
  }
  return out;
}

RigidTransformd SensorRig::default_lidar_to_camera() {
  // LiDAR axes: x forward, y left, z up. Camera axes: x right, y down, z forward.
  Matrix3<double> axes;
  axes << 0.0, -1.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0;
  const Matrix3<double> mount = euler_to_rotation(deg2rad(0.8), deg2rad(-1.5), deg2rad(0.5));
  const Matrix3<double> r = mount * axes;
  const Vector3<double> camera_in_lidar(0.25, 0.3, -0.1);
  return {r, -(r * camera_in_lidar)};
}

int count_visible_primitives(const RenderResult& render, int min_pixels) {
  std::map<int, int> pixels;
  for (Eigen::Index i = 0; i < render.surfaces.size(); ++i) {
    const int prim = surface_primitive(render.surfaces.data()[i]);
    if (prim >= 0) ++pixels[prim];
  }
  int visible = 0;
  for (const auto& [prim, count] : pixels) visible += count >= min_pixels ? 1 : 0;
  return visible;
}

namespace {

Scene build_scene(std::uint64_t seed, const SceneConfig& config) {
  Rng rng(seed);
  Scene scene;
  const double base = uniform(rng, 0.25, 0.45);
  scene.ground_albedo_a = Vector3<double>::Constant(base);
  scene.ground_albedo_b = Vector3<double>::Constant(base + uniform(rng, 0.08, 0.2));
  scene.ground_tile = uniform(rng, 1.5, 3.0);

  const int nboxes = config.min_boxes + static_cast<int>(uniform_index(rng, config.max_boxes - config.min_boxes + 1));
  for (int i = 0; i < nboxes; ++i) {
    Box b;
    b.half_extents = {uniform(rng, 0.3, 2.0), uniform(rng, 0.3, 2.0), uniform(rng, 0.3, 2.5)};
    const double x = uniform(rng, 4.0 + b.half_extents.head<2>().norm(), 38.0);
    const double y_lim = std::min(0.9 * x, 18.0);
    b.center = {x, uniform(rng, -y_lim, y_lim), b.half_extents.z()};
    b.yaw = uniform(rng, -kPi<double>, kPi<double>);
    for (auto& a : b.face_albedo) a = random_albedo(rng);
    scene.boxes.push_back(b);
  }
  const int nwalls = config.min_walls + static_cast<int>(uniform_index(rng, config.max_walls - config.min_walls + 1));
  for (int i = 0; i < nwalls; ++i) {
    Wall w;
    w.half_width = uniform(rng, 2.0, 8.0);
    w.half_height = uniform(rng, 1.5, 4.0);
    w.center = {uniform(rng, 12.0, 38.0), uniform(rng, -12.0, 12.0), w.half_height};
    w.yaw = uniform(rng, -kPi<double>, kPi<double>);
    w.albedo = random_albedo(rng);
    scene.walls.push_back(w);
  }
  return scene;
}

}  // namespace

Scene generate_scene(std::uint64_t seed, const SceneConfig& config, const SensorRig& rig) {
  if (config.min_boxes < 0 || config.max_boxes < config.min_boxes || config.min_walls < 0 ||
      config.max_walls < config.min_walls) {
    throw Error("scene config: inconsistent primitive counts");
  }
  for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
    Scene scene = build_scene(attempt == 0 ? seed : derive_seed(seed, attempt), config);
    scene.seed = seed;
    const RenderResult r = render_camera(scene, rig.camera_pose(), rig.camera);
    if (count_visible_primitives(r, config.min_visible_pixels) >= config.min_visible_primitives) return scene;
  }
  throw Error("degenerate scene configuration");
}

SyntheticFrame make_frame(std::uint64_t seed, const SceneConfig& config, const SensorRig& rig) {
  SyntheticFrame frame;
  frame.scene = generate_scene(seed, config, rig);
  frame.scan = simulate_lidar(frame.scene, rig.lidar);
  frame.render = render_camera(frame.scene, rig.camera_pose(), rig.camera);
  return frame;
}

}  // namespace regnet
