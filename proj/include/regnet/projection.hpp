#pragma once

// LiDAR-to-camera projection into sparse inverse-depth images, max-pool
// densification, and per-channel mean adjustment.

#include <Eigen/Dense>

#include <vector>

#include "regnet/geometry.hpp"

namespace regnet {

/// Row-major image plane; (row, col) = (v, u).
using ImagePlane = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Pinhole intrinsics. The projection matrix is K [I | 0]; any extra column
/// of a rectified projection matrix is absorbed into the extrinsic transform.
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  void validate() const;
  Matrix3<double> matrix() const;
};

struct PointCloud {
  Eigen::Matrix3Xd points;
  Eigen::VectorXd intensity;  // empty, or one value in [0, 1] per point

  Eigen::Index size() const { return points.cols(); }
  bool empty() const { return points.cols() == 0; }
};

/// Inverse depth per pixel; 0 means no measurement.
struct SparseDepthMap {
  ImagePlane values;

  int height() const { return static_cast<int>(values.rows()); }
  int width() const { return static_cast<int>(values.cols()); }
  Eigen::Index nonzeros() const { return (values > 0.0).count(); }
};

enum class ImageKind { kRgb, kDepth };

struct ImageTensor {
  std::vector<ImagePlane> channels;
  ImageKind kind = ImageKind::kRgb;
  std::vector<double> means;  // what the last mean_adjust subtracted

  int channel_count() const { return static_cast<int>(channels.size()); }
  int height() const { return channels.empty() ? 0 : static_cast<int>(channels.front().rows()); }
  int width() const { return channels.empty() ? 0 : static_cast<int>(channels.front().cols()); }
};

/// Points with camera-frame depth at or below this are dropped.
inline constexpr double kNearPlane = 0.1;

/// Transforms every point by H, rounds to the nearest pixel, and stores
/// 1/z_c; colliding points keep the nearest (largest inverse depth).
SparseDepthMap project_points(const PointCloud& cloud, const RigidTransformd& h, const CameraIntrinsics& k);

/// Stride-1, same-size k x k max filter with zero padding. k must be odd.
SparseDepthMap maxpool_densify(const SparseDepthMap& depth, int kernel);

/// Subtracts the per-channel mean; the returned copy records the means.
ImageTensor mean_adjust(const ImageTensor& image);

ImageTensor depth_to_image(const SparseDepthMap& depth);

}  // namespace regnet
