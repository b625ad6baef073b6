#pragma once

// Brute-force reference implementations used by the unit and acceptance
// suites.

#include <algorithm>
#include <optional>
#include <vector>

#include "regnet/projection.hpp"
#include "regnet/scene.hpp"

namespace regnet::test {

/// Z-buffer by grouping: every point that rounds into the image is listed
/// with its pixel, the list is sorted by (pixel, depth), and each pixel takes
/// the nearest entry of its group.
inline SparseDepthMap project_oracle(const PointCloud& cloud, const RigidTransformd& h, const CameraIntrinsics& k) {
  struct Entry {
    long pixel;
    double z;
  };
  std::vector<Entry> entries;
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const Vector3<double> p = apply_point(h, Vector3<double>(cloud.points.col(i)));
    if (!(p.z() > kNearPlane)) continue;
    const double u = std::floor(k.fx * p.x() / p.z() + k.cx + 0.5);
    const double v = std::floor(k.fy * p.y() / p.z() + k.cy + 0.5);
    if (u < 0 || v < 0 || u >= k.width || v >= k.height) continue;
    entries.push_back({static_cast<long>(v) * k.width + static_cast<long>(u), p.z()});
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.pixel != b.pixel ? a.pixel < b.pixel : a.z < b.z; });
  SparseDepthMap out;
  out.values = ImagePlane::Zero(k.height, k.width);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i > 0 && entries[i].pixel == entries[i - 1].pixel) continue;
    out.values(entries[i].pixel / k.width, entries[i].pixel % k.width) = 1.0 / entries[i].z;
  }
  return out;
}

/// Max over the k x k window centered on each pixel, by direct scan.
inline SparseDepthMap densify_oracle(const SparseDepthMap& depth, int kernel) {
  const int r = kernel / 2;
  SparseDepthMap out;
  out.values = ImagePlane::Zero(depth.height(), depth.width());
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      double best = 0.0;
      for (int dv = -r; dv <= r; ++dv) {
        for (int du = -r; du <= r; ++du) {
          const int vv = v + dv, uu = u + du;
          if (vv >= 0 && vv < depth.height() && uu >= 0 && uu < depth.width()) best = std::max(best, depth.values(vv, uu));
        }
      }
      out.values(v, u) = best;
    }
  }
  return out;
}

/// Nearest hit over all primitives without any culling, in the same
/// primitive order as the scene's ray caster.
inline std::optional<Hit> cast_ray_oracle(const Scene& scene, const Vector3<double>& origin,
                                          const Vector3<double>& direction, double t_max) {
  std::optional<Hit> best;
  auto consider = [&](const std::optional<Hit>& h) {
    if (h && h->t <= t_max && (!best || h->t < best->t)) best = h;
  };
  if (scene.has_ground) consider(intersect_ground(scene, origin, direction));
  for (std::size_t i = 0; i < scene.boxes.size(); ++i) {
    consider(intersect_box(scene.boxes[i], static_cast<int>(i), origin, direction));
  }
  for (std::size_t i = 0; i < scene.walls.size(); ++i) {
    consider(intersect_wall(scene.walls[i], static_cast<int>(scene.boxes.size() + i), origin, direction));
  }
  return best;
}

}  // namespace regnet::test
