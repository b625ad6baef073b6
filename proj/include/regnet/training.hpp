#pragma once

// Training samples, seeded sample streams, and the Adam training loop.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "regnet/decalib.hpp"
#include "regnet/model.hpp"
#include "regnet/optim.hpp"
#include "regnet/pipeline.hpp"
#include "regnet/scene.hpp"

namespace regnet {

struct TrainingSample {
  ImageTensor rgb;    // mean adjusted
  ImageTensor depth;  // projected with h_init, densified, mean adjusted
  DecalibVector target;
  RigidTransformd decalib;
  RigidTransformd h_init;
  RigidTransformd h_gt;
};

struct SampleSettings {
  DecalibRange range{0.3, 5.0};
  Representation representation = Representation::kDualQuaternion;
  double balance = kDefaultBalanceFactor;
  int densify_kernel = kDefaultDensifyKernel;

  static SampleSettings for_model(const RegNetConfig& config, int densify_kernel = kDefaultDensifyKernel) {
    return {config.range, config.representation, config.balance, densify_kernel};
  }
};

/// Samples phi from `seed`, projects the cloud with H_init = H_gt * phi and
/// encodes phi as the regression target. Never rejects sparse projections.
TrainingSample make_sample(const Frame& frame, const RigidTransformd& h_gt, const SampleSettings& settings,
                           std::uint64_t seed);

/// The network-facing frame of a synthetic render: LiDAR cloud in the sensor
/// frame, raw RGB, camera intrinsics.
Frame to_frame(const SyntheticFrame& synthetic, const SensorRig& rig);

class SampleSource {
 public:
  virtual ~SampleSource() = default;
  /// Sample number `index`; the content depends only on the index.
  virtual TrainingSample sample(long index) const = 0;
};

/// Fresh synthetic scene and fresh decalibration per index, from seeds
/// derived from (scene_seed, index) and (decalib_seed, index).
class SyntheticSampleSource : public SampleSource {
 public:
  SyntheticSampleSource(SensorRig rig, SceneConfig scene, SampleSettings settings, std::uint64_t scene_seed,
                        std::uint64_t decalib_seed)
      : rig_(std::move(rig)),
        scene_(scene),
        settings_(settings),
        scene_seed_(scene_seed),
        decalib_seed_(decalib_seed) {}

  TrainingSample sample(long index) const override;
  const SensorRig& rig() const { return rig_; }
  const SampleSettings& settings() const { return settings_; }

 private:
  SensorRig rig_;
  SceneConfig scene_;
  SampleSettings settings_;
  std::uint64_t scene_seed_;
  std::uint64_t decalib_seed_;
};

/// Cycles through a fixed list of samples.
class FixedSampleSource : public SampleSource {
 public:
  explicit FixedSampleSource(std::vector<TrainingSample> samples);
  TrainingSample sample(long index) const override;
  std::size_t size() const { return samples_.size(); }

 private:
  std::vector<TrainingSample> samples_;
};

/// Mean absolute errors over a sample set, per axis.
struct ValidationResult {
  long step = 0;
  std::array<double, 3> rotation_mae_deg{};
  std::array<double, 3> translation_mae_m{};
  double loss = 0.0;  // mean Euclidean loss
  std::vector<MetricRecord> per_sample;

  double median_rotation_mae_deg() const;
};

struct LossRecord {
  long step = 0;       // steps completed
  double loss = 0.0;   // loss of the sample at this step
  double window_mean = 0.0;  // mean loss since the previous record
};

struct TrainOptions {
  long steps = 0;
  AdamSettings adam;
  long log_every = 100;
  long validate_every = 0;  // 0 disables periodic validation
  const SampleSource* validation = nullptr;
  int validation_samples = 0;
  std::optional<std::filesystem::path> diagnostic_checkpoint;
  std::function<void(const LossRecord&)> on_loss;
  std::function<void(const ValidationResult&)> on_validation;
};

struct TrainResult {
  std::vector<LossRecord> losses;
  std::vector<ValidationResult> validation;
  long steps = 0;
};

/// Adam with batch size 1 over samples 0..steps-1 of `source`. A non-finite
/// loss writes the diagnostic checkpoint (when configured) and throws.
template <typename Scalar>
TrainResult train(RegNet<Scalar>& model, const SampleSource& source, const TrainOptions& options);

/// Runs the model on samples 0..count-1 of `source` and scores the corrected
/// calibrations H_init * phi_hat^-1 against H_gt.
template <typename Scalar>
ValidationResult validate(RegNet<Scalar>& model, const SampleSource& source, int count);

/// Mean Euclidean loss over samples 0..count-1.
template <typename Scalar>
double mean_loss(RegNet<Scalar>& model, const SampleSource& source, int count);

/// The constant-identity predictor's errors on the same samples.
ValidationResult zero_predictor(const SampleSource& source, int count);

}  // namespace regnet
