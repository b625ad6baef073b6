#pragma once

// Project configuration in JSON. Every field has a default; unknown keys are
// rejected so typos do not silently fall back to defaults. The layout is
// documented in docs/formats.md.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "regnet/model.hpp"
#include "regnet/optim.hpp"
#include "regnet/scene.hpp"

namespace regnet {

struct TrainingConfig {
  long steps = 20000;
  std::uint64_t init_seed = 1;
  std::uint64_t scene_seed = 1000;
  std::uint64_t decalib_seed = 2000;
  AdamSettings adam{3e-4, 0.9, 0.999, 1e-8};
  long log_every = 100;
  long validate_every = 2000;
  int validation_samples = 200;
  std::uint64_t validation_seed = 9000;
};

struct CascadeConfig {
  std::vector<std::string> experts;
  int passes_per_stage = 1;
};

struct FilterConfig {
  std::string mode = "median";
  int window = 0;
};

struct EvaluationConfig {
  int sequence_frames = 100;
  int runs = 10;
  std::uint64_t seed = 7;
};

struct ProjectConfig {
  SensorRig rig;
  SceneConfig scene;
  RegNetConfig model = RegNetConfig::toy();
  int densify_kernel = 5;
  TrainingConfig training;
  CascadeConfig cascade;
  FilterConfig filter;
  EvaluationConfig evaluation;
};

using Json = nlohmann::ordered_json;

Json to_json(const RigidTransformd& h);
RigidTransformd transform_from_json(const Json& j);
Json to_json(const DecalibRange& r);
DecalibRange range_from_json(const Json& j);
Json to_json(const RegNetConfig& c);
RegNetConfig model_config_from_json(const Json& j);
Json to_json(const SensorRig& rig);
SensorRig rig_from_json(const Json& j);
Json to_json(const Scene& scene);
Json to_json(const ProjectConfig& c);
ProjectConfig project_config_from_json(const Json& j);

ProjectConfig load_project_config(const std::filesystem::path& path);
void save_project_config(const ProjectConfig& config, const std::filesystem::path& path);

}  // namespace regnet
