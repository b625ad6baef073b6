#pragma once

// Evaluation protocols: expert loading, the fixed-decalibration sequence
// protocol with temporal filtering, paired cascade trials, and the
// representation comparison. Results stream out as JSON lines.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "regnet/config.hpp"
#include "regnet/pipeline.hpp"
#include "regnet/training.hpp"

namespace regnet {

Json to_json(const MetricRecord& m);

/// One JSON object per line.
class RecordWriter {
 public:
  explicit RecordWriter(std::ostream* out) : out_(out) {}
  void write(const Json& record);

 private:
  std::ostream* out_;
};

// ---------------------------------------------------------------------------
// Experts

/// Builds a registry for a known ground truth (needed by oracle experts).
using RegistryFactory = std::function<ExpertRegistry(const RigidTransformd& ground_truth)>;

/// Comma-separated expert list, coarsest first. Entries are checkpoint
/// paths, "oracle" or "identity". Checkpoints carry their own range; a stub
/// takes `stub_range` when first and half the previous range otherwise.
RegistryFactory parse_expert_list(const std::string& list, const DecalibRange& stub_range);

RegistryFactory single_expert(std::shared_ptr<Regressor> regressor, const DecalibRange& range, const std::string& name);
RegistryFactory oracle_experts(const std::vector<DecalibRange>& ranges);

// ---------------------------------------------------------------------------
// Sequence protocol

struct SequenceOptions {
  SensorRig rig;
  SceneConfig scene;
  DecalibRange range{0.3, 5.0};  // decalibration sampled once per run
  int frames = 100;
  int runs = 1;
  std::uint64_t seed = 7;
  FilterMode filter = FilterMode::kMedian;
  int window = 0;
  CascadeOptions cascade;
  /// Frames whose cascade estimate is replaced by estimate * outlier_offset.
  std::vector<int> outlier_frames;
  RigidTransformd outlier_offset = euler_to_transform(EulerPose<double>{deg2rad(25.0), deg2rad(-20.0), deg2rad(30.0),
                                                                        Vector3<double>(1.0, -1.0, 0.8)});
};

struct SequenceRun {
  int run = 0;
  RigidTransformd decalib;
  RigidTransformd h_init;
  MetricRecord initial_error;
  std::vector<RigidTransformd> estimates;     // per frame, after any outlier injection
  std::vector<MetricRecord> frame_errors;     // per frame
  RigidTransformd filtered;                   // after the last frame
  MetricRecord filtered_error;
  /// Per-axis median of the per-frame errors.
  std::array<double, 3> median_frame_rotation_deg{};
  std::array<double, 3> median_frame_translation_m{};
};

/// Frame f of run r renders scene derive_seed(derive_seed(seed, r), f); the
/// decalibration of run r is sampled from derive_seed(seed ^ 0xdeca1b, r).
SequenceRun run_sequence(const RegistryFactory& experts, const SequenceOptions& options, int run,
                         RecordWriter* records = nullptr);

std::vector<SequenceRun> evaluate_sequences(const RegistryFactory& experts, const SequenceOptions& options,
                                            RecordWriter* records = nullptr);

// ---------------------------------------------------------------------------
// Paired cascade trials

struct CascadeTrial {
  std::vector<MetricRecord> stage_errors;  // after each stage
  MetricRecord initial_error;
};

/// Trial t: scene derive_seed(seed, t), decalibration from
/// derive_seed(seed ^ 0xca5cade, t) within `range`.
std::vector<CascadeTrial> cascade_trials(const RegistryFactory& experts, const SensorRig& rig, const SceneConfig& scene,
                                         const DecalibRange& range, int trials, std::uint64_t seed,
                                         const CascadeOptions& options = {});

/// One-sided sign test: P(X >= successes) for X ~ Binomial(trials, 1/2).
double sign_test_p_value(int successes, int trials);

// ---------------------------------------------------------------------------
// Representation comparison

struct ComparisonOptions {
  SensorRig rig;
  SceneConfig scene;
  RegNetConfig model = RegNetConfig::toy();
  int densify_kernel = kDefaultDensifyKernel;
  long steps = 600;
  long validate_every = 200;
  int validation_samples = 50;
  AdamSettings adam{3e-4, 0.9, 0.999, 1e-8};
  std::uint64_t init_seed = 1;
  std::uint64_t scene_seed = 1000;
  std::uint64_t decalib_seed = 2000;
  std::uint64_t validation_seed = 9000;
};

struct ComparisonRow {
  Representation representation;
  long step = 0;
  std::array<double, 3> rotation_mae_deg{};
  std::array<double, 3> translation_mae_m{};
};

/// Trains one model per representation under identical seeds and budgets
/// and records validation MAE against the iteration count.
std::vector<ComparisonRow> compare_representations(const ComparisonOptions& options);

/// Fixed-width text table of the comparison, one line per (representation,
/// step).
std::string format_comparison(const std::vector<ComparisonRow>& rows);

}  // namespace regnet
