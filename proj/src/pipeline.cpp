#include "regnet/pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace regnet {

MetricRecord evaluate(const RigidTransformd& estimate, const RigidTransformd& ground_truth) {
  const RigidTransformd e = ground_truth.inverse() * estimate;
  const EulerPose<double> euler = transform_to_euler(e);
  MetricRecord m;
  m.rotation_deg = {std::abs(rad2deg(euler.yaw)), std::abs(rad2deg(euler.pitch)), std::abs(rad2deg(euler.roll))};
  for (int i = 0; i < 3; ++i) m.translation_m[i] = std::abs(e.translation()[i]);
  m.mean_rotation_deg = (m.rotation_deg[0] + m.rotation_deg[1] + m.rotation_deg[2]) / 3.0;
  m.mean_translation_m = (m.translation_m[0] + m.translation_m[1] + m.translation_m[2]) / 3.0;
  return m;
}

NetworkInputs prepare_inputs(const Frame& frame, const RigidTransformd& h, int densify_kernel) {
  NetworkInputs in;
  in.projected = project_points(frame.cloud, h, frame.camera);
  in.depth = mean_adjust(depth_to_image(maxpool_densify(in.projected, densify_kernel)));
  in.rgb = mean_adjust(frame.rgb);
  return in;
}

ExpertRegistry::ExpertRegistry(std::vector<Expert> experts) {
  for (auto& e : experts) add(std::move(e));
}

void ExpertRegistry::add(Expert expert) {
  if (!expert.regressor) throw Error("expert registry: expert '" + expert.name + "' has no regressor");
  expert.range.validate();
  if (!experts_.empty()) {
    const DecalibRange& prev = experts_.back().range;
    if (!(expert.range.max_translation < prev.max_translation) ||
        !(expert.range.max_rotation_deg < prev.max_rotation_deg)) {
      throw Error("expert registry: ranges must strictly decrease from coarse to fine");
    }
  }
  experts_.push_back(std::move(expert));
}

ExpertRegistry ExpertRegistry::online() const {
  ExpertRegistry out;
  const std::size_t first = experts_.size() > 2 ? experts_.size() - 2 : 0;
  for (std::size_t i = first; i < experts_.size(); ++i) out.add(experts_[i]);
  return out;
}

CalibrationEstimate refine_once(Regressor& regressor, const RigidTransformd& h_current, const Frame& frame,
                                int densify_kernel) {
  const NetworkInputs inputs = prepare_inputs(frame, h_current, densify_kernel);
  const RigidTransformd decalib = regressor.estimate(inputs, h_current);
  CalibrationEstimate out;
  out.estimate = apply_correction(h_current, decalib);
  out.stages.push_back({"", out.estimate, std::nullopt});
  return out;
}

CalibrationEstimate cascade(const ExpertRegistry& registry, const RigidTransformd& h_init, const Frame& frame,
                            const CascadeOptions& options) {
  if (registry.empty()) throw Error("cascade: expert registry is empty");
  if (options.passes_per_stage < 1) throw Error("cascade: passes per stage must be >= 1");
  CalibrationEstimate out;
  out.estimate = h_init;
  for (const Expert& expert : registry.experts()) {
    for (int pass = 0; pass < options.passes_per_stage; ++pass) {
      out.estimate = refine_once(*expert.regressor, out.estimate, frame, options.densify_kernel).estimate;
    }
    StageResidual stage{expert.name, out.estimate, std::nullopt};
    if (options.ground_truth) stage.error = evaluate(out.estimate, *options.ground_truth);
    out.stages.push_back(std::move(stage));
  }
  return out;
}

FilterMode parse_filter_mode(const std::string& name) {
  if (name == "median") return FilterMode::kMedian;
  if (name == "avg" || name == "moving-average" || name == "mean") return FilterMode::kMovingAverage;
  throw Error("unknown filter mode '" + name + "' (expected median or avg)");
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error("median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

TemporalFilter::TemporalFilter(FilterMode mode, int window, const RigidTransformd& reference)
    : mode_(mode), window_(window), reference_(reference) {
  if (window < 0) throw Error("temporal filter: window must be >= 1, or 0 for the whole sequence");
}

std::array<double, 6> TemporalFilter::components(const RigidTransformd& decalib) {
  const EulerPose<double> e = transform_to_euler(decalib);
  return {e.yaw, e.pitch, e.roll, e.translation[0], e.translation[1], e.translation[2]};
}

RigidTransformd TemporalFilter::from_components(const std::array<double, 6>& c) {
  EulerPose<double> e;
  e.yaw = c[0];
  e.pitch = c[1];
  e.roll = c[2];
  e.translation = {c[3], c[4], c[5]};
  return euler_to_transform(e);
}

RigidTransformd TemporalFilter::update(const RigidTransformd& estimate) {
  history_.push_back(components(estimate.inverse() * reference_));
  if (window_ > 0) {
    while (history_.size() > static_cast<std::size_t>(window_)) history_.pop_front();
  }
  return current();
}

RigidTransformd TemporalFilter::current() const {
  if (history_.empty()) throw Error("temporal filter: no frames observed yet");
  std::array<double, 6> out{};
  for (int i = 0; i < 6; ++i) {
    std::vector<double> column;
    column.reserve(history_.size());
    for (const auto& h : history_) column.push_back(h[static_cast<std::size_t>(i)]);
    if (mode_ == FilterMode::kMedian) {
      out[static_cast<std::size_t>(i)] = median(std::move(column));
    } else {
      double sum = 0.0;
      for (double v : column) sum += v;
      out[static_cast<std::size_t>(i)] = sum / static_cast<double>(column.size());
    }
  }
  return apply_correction(reference_, from_components(out));
}

}  // namespace regnet
