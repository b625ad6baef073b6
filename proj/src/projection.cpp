#include "regnet/projection.hpp"

#include <cmath>

namespace regnet {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw Error("camera intrinsics: focal lengths must be positive");
  if (width <= 0 || height <= 0) throw Error("camera intrinsics: image size must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw Error("camera intrinsics: principal point outside the image");
  }
}

Matrix3<double> CameraIntrinsics::matrix() const {
  Matrix3<double> k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

SparseDepthMap project_points(const PointCloud& cloud, const RigidTransformd& h, const CameraIntrinsics& k) {
  k.validate();
  SparseDepthMap out;
  out.values = ImagePlane::Zero(k.height, k.width);
  const Matrix3<double>& r = h.rotation();
  const Vector3<double>& t = h.translation();
  for (Eigen::Index i = 0; i < cloud.points.cols(); ++i) {
    const Vector3<double> x = cloud.points.col(i);
    const Vector3<double> xc = r * x + t;
    if (!(xc.z() > kNearPlane)) continue;
    const double u = std::floor(k.fx * xc.x() / xc.z() + k.cx + 0.5);
    const double v = std::floor(k.fy * xc.y() / xc.z() + k.cy + 0.5);
    if (!(u >= 0.0 && v >= 0.0 && u < k.width && v < k.height)) continue;
    double& cell = out.values(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u));
    cell = std::max(cell, 1.0 / xc.z());
  }
  return out;
}

SparseDepthMap maxpool_densify(const SparseDepthMap& depth, int kernel) {
  if (kernel < 1) throw Error("kernel must be positive");
  if (kernel % 2 == 0) throw Error("kernel must be odd");
  const int r = kernel / 2;
  const Eigen::Index rows = depth.values.rows();
  const Eigen::Index cols = depth.values.cols();
  // Max is separable: rows first, then columns. Padding is zero, which never
  // wins against the nonnegative inverse depths.
  ImagePlane horizontal = ImagePlane::Zero(rows, cols);
  for (Eigen::Index y = 0; y < rows; ++y) {
    for (Eigen::Index x = 0; x < cols; ++x) {
      const Eigen::Index lo = std::max<Eigen::Index>(0, x - r);
      const Eigen::Index hi = std::min<Eigen::Index>(cols - 1, x + r);
      horizontal(y, x) = std::max(0.0, depth.values.row(y).segment(lo, hi - lo + 1).maxCoeff());
    }
  }
  SparseDepthMap out;
  out.values = ImagePlane::Zero(rows, cols);
  for (Eigen::Index y = 0; y < rows; ++y) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, y - r);
    const Eigen::Index hi = std::min<Eigen::Index>(rows - 1, y + r);
    out.values.row(y) = horizontal.middleRows(lo, hi - lo + 1).colwise().maxCoeff();
  }
  return out;
}

ImageTensor mean_adjust(const ImageTensor& image) {
  if (image.channels.empty() || image.channels.front().size() == 0) {
    throw Error("mean_adjust: empty image");
  }
  ImageTensor out;
  out.kind = image.kind;
  out.channels.reserve(image.channels.size());
  for (const ImagePlane& c : image.channels) {
    const double mean = c.mean();
    out.means.push_back(mean);
    out.channels.push_back(c - mean);
  }
  return out;
}

ImageTensor depth_to_image(const SparseDepthMap& depth) {
  ImageTensor img;
  img.kind = ImageKind::kDepth;
  img.channels.push_back(depth.values);
  return img;
}

}  // namespace regnet
