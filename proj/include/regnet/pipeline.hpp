#pragma once

// Inference side: network inputs from a frame, expert regressors, the
// coarse-to-fine cascade, temporal filtering and error metrics.

#include <array>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "regnet/decalib.hpp"
#include "regnet/model.hpp"
#include "regnet/projection.hpp"

namespace regnet {

// ---------------------------------------------------------------------------
// Metrics

/// Errors of an estimate against ground truth, from E = H_gt^-1 * H_est.
/// Angles are |yaw|, |pitch|, |roll| of E in degrees; translations are the
/// absolute components of E's translation in meters.
struct MetricRecord {
  std::array<double, 3> rotation_deg{};
  std::array<double, 3> translation_m{};
  double mean_rotation_deg = 0.0;
  double mean_translation_m = 0.0;
};

MetricRecord evaluate(const RigidTransformd& estimate, const RigidTransformd& ground_truth);

// ---------------------------------------------------------------------------
// Inputs

/// One camera frame with its LiDAR scan. The RGB image is raw (not mean
/// adjusted).
struct Frame {
  PointCloud cloud;
  ImageTensor rgb;
  CameraIntrinsics camera;
};

struct NetworkInputs {
  ImageTensor rgb;          // mean adjusted
  ImageTensor depth;        // densified, then mean adjusted
  SparseDepthMap projected; // raw sparse projection
};

inline constexpr int kDefaultDensifyKernel = 5;

NetworkInputs prepare_inputs(const Frame& frame, const RigidTransformd& h, int densify_kernel = kDefaultDensifyKernel);

// ---------------------------------------------------------------------------
// Regressors

class Regressor {
 public:
  virtual ~Regressor() = default;
  /// Estimated decalibration phi_hat of `h_current`; the corrected
  /// calibration is h_current * phi_hat^-1.
  virtual RigidTransformd estimate(const NetworkInputs& inputs, const RigidTransformd& h_current) = 0;
};

/// Runs a trained RegNet and decodes its output with the model's encoding.
template <typename Scalar>
class NetworkRegressor : public Regressor {
 public:
  explicit NetworkRegressor(std::shared_ptr<RegNet<Scalar>> model) : model_(std::move(model)) {}

  RigidTransformd estimate(const NetworkInputs& inputs, const RigidTransformd&) override {
    return decode_decalib(raw(inputs), model_->config().range, model_->config().balance);
  }

  DecalibVector raw(const NetworkInputs& inputs) {
    const Tensor<Scalar> out = model_->predict(to_tensor<Scalar>(inputs.rgb), to_tensor<Scalar>(inputs.depth));
    DecalibVector v;
    v.representation = model_->config().representation;
    for (std::size_t i = 0; i < out.size(); ++i) v.values[static_cast<Eigen::Index>(i)] = static_cast<double>(out[i]);
    return v;
  }

  RegNet<Scalar>& model() { return *model_; }

 private:
  std::shared_ptr<RegNet<Scalar>> model_;
};

/// Knows the ground truth and returns the exact residual decalibration.
class OracleRegressor : public Regressor {
 public:
  explicit OracleRegressor(const RigidTransformd& ground_truth) : ground_truth_(ground_truth) {}
  RigidTransformd estimate(const NetworkInputs&, const RigidTransformd& h_current) override {
    return residual_decalib(h_current, ground_truth_);
  }

 private:
  RigidTransformd ground_truth_;
};

/// Always reports "no decalibration".
class IdentityRegressor : public Regressor {
 public:
  RigidTransformd estimate(const NetworkInputs&, const RigidTransformd&) override { return RigidTransformd::Identity(); }
};

struct Expert {
  DecalibRange range;
  std::shared_ptr<Regressor> regressor;
  std::string name;
};

/// Experts ordered from the coarsest to the finest range.
class ExpertRegistry {
 public:
  ExpertRegistry() = default;
  explicit ExpertRegistry(std::vector<Expert> experts);

  /// Appends an expert; its range must be strictly smaller (in both
  /// translation and rotation) than the previous one.
  void add(Expert expert);

  const std::vector<Expert>& experts() const { return experts_; }
  bool empty() const { return experts_.empty(); }
  std::size_t size() const { return experts_.size(); }

  /// The online-calibration preset: only the two finest experts.
  ExpertRegistry online() const;

 private:
  std::vector<Expert> experts_;
};

// ---------------------------------------------------------------------------
// Refinement

struct StageResidual {
  std::string expert;
  RigidTransformd estimate;
  std::optional<MetricRecord> error;  // present when ground truth was supplied
};

struct CalibrationEstimate {
  RigidTransformd estimate;
  std::vector<StageResidual> stages;
  int stage_count() const { return static_cast<int>(stages.size()); }
};

struct CascadeOptions {
  int passes_per_stage = 1;
  int densify_kernel = kDefaultDensifyKernel;
  std::optional<RigidTransformd> ground_truth;
};

/// Project with h_current, run the regressor, return h_current * phi_hat^-1.
CalibrationEstimate refine_once(Regressor& regressor, const RigidTransformd& h_current, const Frame& frame,
                                int densify_kernel = kDefaultDensifyKernel);

CalibrationEstimate cascade(const ExpertRegistry& registry, const RigidTransformd& h_init, const Frame& frame,
                            const CascadeOptions& options = {});

// ---------------------------------------------------------------------------
// Temporal filtering

enum class FilterMode { kMedian, kMovingAverage };

FilterMode parse_filter_mode(const std::string& name);

/// Per-component filter over the six Euler/translation components of the
/// estimated decalibration relative to a fixed reference calibration
/// (phi = estimate^-1 * reference). Components near +-pi would wrap; the
/// filter assumes decalibrations far from that.
class TemporalFilter {
 public:
  /// `window` = 0 keeps the whole sequence.
  TemporalFilter(FilterMode mode, int window, const RigidTransformd& reference);

  /// Appends the estimate and returns the filtered calibration.
  RigidTransformd update(const RigidTransformd& estimate);
  RigidTransformd update(const CalibrationEstimate& estimate) { return update(estimate.estimate); }

  /// Filtered calibration; requires at least one observed frame.
  RigidTransformd current() const;
  std::size_t observed() const { return history_.size(); }

  static std::array<double, 6> components(const RigidTransformd& decalib);
  static RigidTransformd from_components(const std::array<double, 6>& c);

 private:
  FilterMode mode_;
  int window_;
  RigidTransformd reference_;
  std::deque<std::array<double, 6>> history_;
};

/// Median with the mean of the two middle values for even counts.
double median(std::vector<double> values);

}  // namespace regnet
