#pragma once

// KITTI raw formats: velodyne scans (4 little-endian float32 per point:
// x, y, z, reflectance) and the calib_cam_to_cam / calib_velo_to_cam text
// files.

#include <filesystem>
#include <map>
#include <string>

#include "regnet/geometry.hpp"
#include "regnet/projection.hpp"

namespace regnet {

PointCloud read_velodyne(const std::filesystem::path& path);
/// Coordinates and intensity are narrowed to float32; a missing intensity is
/// written as 0.
void write_velodyne(const PointCloud& cloud, const std::filesystem::path& path);

/// "key: numbers..." records of a KITTI calibration file. Values that do not
/// parse as numbers (calib_time, ...) are kept only as text.
class CalibFile {
 public:
  static CalibFile read(const std::filesystem::path& path);
  static CalibFile parse(const std::string& text, const std::string& source = "<memory>");

  bool has(const std::string& key) const { return text_.count(key) > 0; }
  /// Exactly `count` numbers; throws naming the key when missing or short.
  std::vector<double> numbers(const std::string& key, std::size_t count) const;

 private:
  std::string source_;
  std::map<std::string, std::string> text_;
};

struct KittiCalibration {
  CameraIntrinsics camera;            // from P_rect's left 3x3 block and S_rect
  Eigen::Matrix<double, 3, 4> projection = Eigen::Matrix<double, 3, 4>::Zero();  // P_rect_0X
  Matrix3<double> rectification = Matrix3<double>::Identity();                   // R_rect_00
  RigidTransformd velo_to_cam;         // R and T exactly as stored (not re-orthonormalized)
  /// LiDAR to rectified camera with P's translation column absorbed:
  /// [I | K^-1 P[:,3]] * R_rect * T_velo_cam, re-orthonormalized.
  RigidTransformd extrinsic;
};

/// `camera` selects P_rect_0X / S_rect_0X (2 = left color camera).
KittiCalibration read_kitti_calib(const std::filesystem::path& cam_to_cam,
                                  const std::filesystem::path& velo_to_cam, int camera = 2);

/// Builds the composite extrinsic from the raw calibration pieces.
RigidTransformd absorb_projection(const Eigen::Matrix<double, 3, 4>& projection, const Matrix3<double>& rectification,
                                  const RigidTransformd& velo_to_cam);

enum class CalibPrecision {
  kExact,  // 17 significant digits, roundtrips doubles bit-exactly
  kKitti,  // KITTI's own %e with 6 fractional digits
};

/// Writes a calibration in which P_rect has a zero translation column and
/// R_rect is the identity, so the extrinsic is exactly the velodyne-to-camera
/// transform.
void write_kitti_calib(const CameraIntrinsics& camera, const RigidTransformd& extrinsic,
                       const std::filesystem::path& cam_to_cam, const std::filesystem::path& velo_to_cam,
                       CalibPrecision precision = CalibPrecision::kExact, int camera_index = 2);

}  // namespace regnet
