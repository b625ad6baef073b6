#include "regnet/dataset.hpp"

#include <cstdio>
#include <fstream>

#include "regnet/image_io.hpp"
#include "regnet/kitti.hpp"
#include "regnet/training.hpp"

namespace regnet {

namespace fs = std::filesystem;

std::string frame_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%010d", index);
  return buf;
}

void write_synthetic_dataset(const ProjectConfig& config, const fs::path& dir, int count, std::uint64_t seed) {
  if (count < 1) throw Error("synth-gen: frame count must be >= 1");
  fs::create_directories(dir / "image_02" / "data");
  fs::create_directories(dir / "velodyne_points" / "data");
  fs::create_directories(dir / "scenes");
  write_kitti_calib(config.rig.camera, config.rig.lidar_to_camera, dir / "calib_cam_to_cam.txt",
                    dir / "calib_velo_to_cam.txt", CalibPrecision::kExact);
  save_project_config(config, dir / "config.json");
  for (int i = 0; i < count; ++i) {
    const SyntheticFrame f = make_frame(derive_seed(seed, static_cast<std::uint64_t>(i)), config.scene, config.rig);
    const std::string name = frame_name(i);
    write_png(f.render.rgb, dir / "image_02" / "data" / (name + ".png"));
    write_velodyne(f.scan.cloud, dir / "velodyne_points" / "data" / (name + ".bin"));
    std::ofstream scene(dir / "scenes" / (name + ".json"));
    if (!scene) throw Error("cannot write scene file in " + (dir / "scenes").string());
    scene << to_json(f.scene).dump(2) << '\n';
  }
}

DatasetFrame load_dataset_frame(const fs::path& dir, int index) {
  if (!fs::is_directory(dir)) throw Error("frame directory " + dir.string() + " does not exist");
  const KittiCalibration calib = read_kitti_calib(dir / "calib_cam_to_cam.txt", dir / "calib_velo_to_cam.txt");
  const std::string name = frame_name(index);
  DatasetFrame out;
  out.frame.rgb = read_png(dir / "image_02" / "data" / (name + ".png"));
  out.frame.cloud = read_velodyne(dir / "velodyne_points" / "data" / (name + ".bin"));
  out.frame.camera = calib.camera;
  if (out.frame.camera.width == 0) out.frame.camera.width = out.frame.rgb.width();
  if (out.frame.camera.height == 0) out.frame.camera.height = out.frame.rgb.height();
  if (out.frame.camera.width != out.frame.rgb.width() || out.frame.camera.height != out.frame.rgb.height()) {
    throw Error("calibration image size does not match " + name + ".png");
  }
  out.ground_truth = calib.extrinsic;
  return out;
}

DatasetFrame resolve_frame(const std::string& spec, int index, const ProjectConfig& config) {
  const std::string prefix = "synth:";
  if (spec.rfind(prefix, 0) == 0) {
    std::uint64_t seed = 0;
    try {
      std::size_t used = 0;
      seed = std::stoull(spec.substr(prefix.size()), &used);
      if (used != spec.size() - prefix.size()) throw std::invalid_argument(spec);
    } catch (const std::exception&) {
      throw Error("bad frame spec '" + spec + "' (expected synth:SEED or a directory)");
    }
    const SyntheticFrame f = make_frame(derive_seed(seed, static_cast<std::uint64_t>(index)), config.scene, config.rig);
    return {to_frame(f, config.rig), config.rig.lidar_to_camera};
  }
  return load_dataset_frame(spec, index);
}

}  // namespace regnet
