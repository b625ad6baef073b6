#pragma once

// On-disk frames in the KITTI raw layout:
//
//   DIR/calib_cam_to_cam.txt
//   DIR/calib_velo_to_cam.txt
//   DIR/image_02/data/NNNNNNNNNN.png
//   DIR/velodyne_points/data/NNNNNNNNNN.bin
//
// synth-gen additionally writes DIR/scenes/NNNNNNNNNN.json and DIR/config.json.

#include <cstdint>
#include <filesystem>
#include <string>

#include "regnet/config.hpp"
#include "regnet/pipeline.hpp"

namespace regnet {

struct DatasetFrame {
  Frame frame;
  RigidTransformd ground_truth;  // LiDAR to camera from the calibration files
};

std::string frame_name(int index);

/// Renders `count` frames from scenes derive_seed(seed, i) and writes them
/// with exact-precision calibration files.
void write_synthetic_dataset(const ProjectConfig& config, const std::filesystem::path& dir, int count,
                             std::uint64_t seed);

DatasetFrame load_dataset_frame(const std::filesystem::path& dir, int index);

/// "synth:SEED" renders a frame in memory with the configured rig; anything
/// else is a dataset directory.
DatasetFrame resolve_frame(const std::string& spec, int index, const ProjectConfig& config);

}  // namespace regnet
