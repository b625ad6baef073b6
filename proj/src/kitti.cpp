#include "regnet/kitti.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace regnet {

static_assert(std::endian::native == std::endian::little, "velodyne I/O assumes a little-endian host");

PointCloud read_velodyne(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open velodyne file " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 16 != 0) {
    const std::size_t offset = bytes.size() - bytes.size() % 16;
    throw Error("velodyne file " + path.string() + " is truncated: partial record at byte offset " +
                std::to_string(offset) + " (" + std::to_string(bytes.size()) + " bytes, not a multiple of 16)");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(bytes.size() / 16);
  PointCloud cloud;
  cloud.points.resize(3, n);
  cloud.intensity.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    float rec[4];
    std::memcpy(rec, bytes.data() + 16 * i, 16);
    cloud.points.col(i) << rec[0], rec[1], rec[2];
    cloud.intensity[i] = rec[3];
  }
  return cloud;
}

void write_velodyne(const PointCloud& cloud, const std::filesystem::path& path) {
  if (cloud.intensity.size() != 0 && cloud.intensity.size() != cloud.size()) {
    throw Error("write_velodyne: intensity count does not match point count");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write velodyne file " + path.string());
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const float rec[4] = {static_cast<float>(cloud.points(0, i)), static_cast<float>(cloud.points(1, i)),
                          static_cast<float>(cloud.points(2, i)),
                          cloud.intensity.size() ? static_cast<float>(cloud.intensity[i]) : 0.0f};
    out.write(reinterpret_cast<const char*>(rec), 16);
  }
  if (!out) throw Error("failed writing velodyne file " + path.string());
}

CalibFile CalibFile::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open calibration file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

CalibFile CalibFile::parse(const std::string& text, const std::string& source) {
  CalibFile f;
  f.source_ = source;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    f.text_[line.substr(0, colon)] = line.substr(colon + 1);
  }
  return f;
}

std::vector<double> CalibFile::numbers(const std::string& key, std::size_t count) const {
  const auto it = text_.find(key);
  if (it == text_.end()) throw Error("calibration " + source_ + " is missing key '" + key + "'");
  std::istringstream in(it->second);
  std::vector<double> out;
  std::string token;
  while (in >> token) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw Error("calibration " + source_ + " key '" + key + "' has non-numeric value '" + token + "'");
    }
  }
  if (out.size() != count) {
    throw Error("calibration " + source_ + " key '" + key + "' has " + std::to_string(out.size()) +
                " values, expected " + std::to_string(count));
  }
  return out;
}

RigidTransformd absorb_projection(const Eigen::Matrix<double, 3, 4>& projection, const Matrix3<double>& rectification,
                                  const RigidTransformd& velo_to_cam) {
  const Matrix3<double> k = projection.leftCols<3>();
  const Vector3<double> offset = k.inverse() * projection.col(3);
  const RigidTransformd rect(orthonormalize(rectification), Vector3<double>::Zero());
  const RigidTransformd chain = RigidTransformd::Translation(offset) * rect * velo_to_cam;
  return {orthonormalize(chain.rotation()), chain.translation()};
}

KittiCalibration read_kitti_calib(const std::filesystem::path& cam_to_cam, const std::filesystem::path& velo_to_cam,
                                  int camera) {
  if (camera < 0 || camera > 3) throw Error("KITTI camera index must be 0..3");
  const CalibFile cc = CalibFile::read(cam_to_cam);
  const CalibFile vc = CalibFile::read(velo_to_cam);
  const std::string suffix = "_0" + std::to_string(camera);
  KittiCalibration out;
  const auto p = cc.numbers("P_rect" + suffix, 12);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) out.projection(r, c) = p[static_cast<std::size_t>(4 * r + c)];
  }
  const auto rr = cc.numbers("R_rect_00", 9);
  for (int i = 0; i < 9; ++i) out.rectification(i / 3, i % 3) = rr[static_cast<std::size_t>(i)];
  out.camera.fx = out.projection(0, 0);
  out.camera.fy = out.projection(1, 1);
  out.camera.cx = out.projection(0, 2);
  out.camera.cy = out.projection(1, 2);
  if (cc.has("S_rect" + suffix)) {
    const auto s = cc.numbers("S_rect" + suffix, 2);
    out.camera.width = static_cast<int>(std::lround(s[0]));
    out.camera.height = static_cast<int>(std::lround(s[1]));
  }
  const auto r = vc.numbers("R", 9);
  const auto t = vc.numbers("T", 3);
  Matrix3<double> rot;
  for (int i = 0; i < 9; ++i) rot(i / 3, i % 3) = r[static_cast<std::size_t>(i)];
  out.velo_to_cam = RigidTransformd(rot, Vector3<double>(t[0], t[1], t[2]));
  out.extrinsic = absorb_projection(out.projection, out.rectification, out.velo_to_cam);
  return out;
}

namespace {

std::string format_numbers(const double* v, int n, CalibPrecision precision) {
  std::string out;
  char buf[64];
  for (int i = 0; i < n; ++i) {
    if (precision == CalibPrecision::kExact) {
      std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
    } else {
      std::snprintf(buf, sizeof(buf), "%e", v[i]);
    }
    out += ' ';
    out += buf;
  }
  return out;
}

}  // namespace

void write_kitti_calib(const CameraIntrinsics& camera, const RigidTransformd& extrinsic,
                       const std::filesystem::path& cam_to_cam, const std::filesystem::path& velo_to_cam,
                       CalibPrecision precision, int camera_index) {
  if (camera_index < 0 || camera_index > 3) throw Error("KITTI camera index must be 0..3");
  const std::string suffix = "_0" + std::to_string(camera_index);
  const double p[12] = {camera.fx, 0.0, camera.cx, 0.0, 0.0, camera.fy, camera.cy, 0.0, 0.0, 0.0, 1.0, 0.0};
  const double identity[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  const double size[2] = {static_cast<double>(camera.width), static_cast<double>(camera.height)};
  {
    std::ofstream out(cam_to_cam);
    if (!out) throw Error("cannot write calibration file " + cam_to_cam.string());
    out << "R_rect_00:" << format_numbers(identity, 9, precision) << '\n';
    out << "S_rect" << suffix << ':' << format_numbers(size, 2, precision) << '\n';
    out << "P_rect" << suffix << ':' << format_numbers(p, 12, precision) << '\n';
    if (!out) throw Error("failed writing calibration file " + cam_to_cam.string());
  }
  double r[9];
  for (int i = 0; i < 9; ++i) r[i] = extrinsic.rotation()(i / 3, i % 3);
  const double t[3] = {extrinsic.translation()[0], extrinsic.translation()[1], extrinsic.translation()[2]};
  std::ofstream out(velo_to_cam);
  if (!out) throw Error("cannot write calibration file " + velo_to_cam.string());
  out << "R:" << format_numbers(r, 9, precision) << '\n';
  out << "T:" << format_numbers(t, 3, precision) << '\n';
  if (!out) throw Error("failed writing calibration file " + velo_to_cam.string());
}

}  // namespace regnet
