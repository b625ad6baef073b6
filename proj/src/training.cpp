#include "regnet/training.hpp"

#include <algorithm>
#include <cmath>

#include "regnet/checkpoint.hpp"

namespace regnet {

TrainingSample make_sample(const Frame& frame, const RigidTransformd& h_gt, const SampleSettings& settings,
                           std::uint64_t seed) {
  Rng rng(seed);
  TrainingSample s;
  s.h_gt = h_gt;
  s.decalib = sample_decalib(rng, settings.range);
  s.h_init = make_initial(h_gt, s.decalib);
  const NetworkInputs inputs = prepare_inputs(frame, s.h_init, settings.densify_kernel);
  s.rgb = inputs.rgb;
  s.depth = inputs.depth;
  s.target = encode_decalib(s.decalib, settings.representation, settings.range, settings.balance);
  return s;
}

Frame to_frame(const SyntheticFrame& synthetic, const SensorRig& rig) {
  return Frame{synthetic.scan.cloud, synthetic.render.rgb, rig.camera};
}

TrainingSample SyntheticSampleSource::sample(long index) const {
  const auto i = static_cast<std::uint64_t>(index);
  const SyntheticFrame frame = make_frame(derive_seed(scene_seed_, i), scene_, rig_);
  return make_sample(to_frame(frame, rig_), rig_.lidar_to_camera, settings_, derive_seed(decalib_seed_, i));
}

FixedSampleSource::FixedSampleSource(std::vector<TrainingSample> samples) : samples_(std::move(samples)) {
  if (samples_.empty()) throw Error("fixed sample source needs at least one sample");
}

TrainingSample FixedSampleSource::sample(long index) const {
  return samples_[static_cast<std::size_t>(index) % samples_.size()];
}

double ValidationResult::median_rotation_mae_deg() const {
  return median({rotation_mae_deg.begin(), rotation_mae_deg.end()});
}

namespace {

template <typename Scalar>
Tensor<Scalar> target_tensor(const DecalibVector& target, int width) {
  Tensor<Scalar> t({width});
  for (int i = 0; i < width; ++i) t[static_cast<std::size_t>(i)] = static_cast<Scalar>(target.values[i]);
  return t;
}

void accumulate(ValidationResult& r, const MetricRecord& m) {
  for (int a = 0; a < 3; ++a) {
    r.rotation_mae_deg[a] += m.rotation_deg[a];
    r.translation_mae_m[a] += m.translation_m[a];
  }
  r.per_sample.push_back(m);
}

void finish(ValidationResult& r, int count) {
  for (int a = 0; a < 3; ++a) {
    r.rotation_mae_deg[a] /= count;
    r.translation_mae_m[a] /= count;
  }
  r.loss /= count;
}

}  // namespace

template <typename Scalar>
TrainResult train(RegNet<Scalar>& model, const SampleSource& source, const TrainOptions& options) {
  if (options.steps < 0) throw Error("train: step count must be >= 0");
  if (options.log_every < 1) throw Error("train: log interval must be >= 1");
  TrainResult result;
  const int width = model.config().output_width();
  const auto params = model.parameter_ptrs();
  double window_sum = 0.0;
  long window_count = 0;
  for (long step = 0; step < options.steps; ++step) {
    const TrainingSample s = source.sample(step);
    model.zero_grad();
    Tape<Scalar> tape;
    const Var out = model.forward(tape, tape.input(to_tensor<Scalar>(s.rgb)), tape.input(to_tensor<Scalar>(s.depth)));
    const Var loss = euclidean_loss(tape, out, tape.input(target_tensor<Scalar>(s.target, width)));
    const double value = static_cast<double>(tape.value(loss)[0]);
    if (!std::isfinite(value)) {
      if (options.diagnostic_checkpoint) write_checkpoint(model, *options.diagnostic_checkpoint);
      throw Error("train: non-finite loss at step " + std::to_string(step) +
                  (options.diagnostic_checkpoint ? ", diagnostic checkpoint written to " +
                                                       options.diagnostic_checkpoint->string()
                                                 : std::string()));
    }
    tape.backward(loss);
    adam_step<Scalar>(params, options.adam);
    result.steps = step + 1;
    window_sum += value;
    ++window_count;
    if (result.steps % options.log_every == 0 || result.steps == options.steps) {
      LossRecord rec{result.steps, value, window_sum / static_cast<double>(window_count)};
      result.losses.push_back(rec);
      if (options.on_loss) options.on_loss(rec);
      window_sum = 0.0;
      window_count = 0;
    }
    if (options.validate_every > 0 && options.validation && options.validation_samples > 0 &&
        (result.steps % options.validate_every == 0 || result.steps == options.steps)) {
      ValidationResult v = validate(model, *options.validation, options.validation_samples);
      v.step = result.steps;
      if (options.on_validation) options.on_validation(v);
      result.validation.push_back(std::move(v));
    }
  }
  return result;
}

template <typename Scalar>
ValidationResult validate(RegNet<Scalar>& model, const SampleSource& source, int count) {
  if (count < 1) throw Error("validate: sample count must be >= 1");
  ValidationResult r;
  const RegNetConfig& cfg = model.config();
  const int width = cfg.output_width();
  for (int i = 0; i < count; ++i) {
    const TrainingSample s = source.sample(i);
    const Tensor<Scalar> out = model.predict(to_tensor<Scalar>(s.rgb), to_tensor<Scalar>(s.depth));
    DecalibVector v;
    v.representation = cfg.representation;
    double loss = 0.0;
    for (int k = 0; k < width; ++k) {
      v.values[k] = static_cast<double>(out[static_cast<std::size_t>(k)]);
      const double d = v.values[k] - s.target.values[k];
      loss += 0.5 * d * d;
    }
    r.loss += loss;
    const RigidTransformd estimate = apply_correction(s.h_init, decode_decalib(v, cfg.range, cfg.balance));
    accumulate(r, evaluate(estimate, s.h_gt));
  }
  finish(r, count);
  return r;
}

template <typename Scalar>
double mean_loss(RegNet<Scalar>& model, const SampleSource& source, int count) {
  return validate(model, source, count).loss;
}

ValidationResult zero_predictor(const SampleSource& source, int count) {
  if (count < 1) throw Error("zero_predictor: sample count must be >= 1");
  ValidationResult r;
  for (int i = 0; i < count; ++i) {
    const TrainingSample s = source.sample(i);
    accumulate(r, evaluate(s.h_init, s.h_gt));
  }
  finish(r, count);
  return r;
}

template TrainResult train<float>(RegNet<float>&, const SampleSource&, const TrainOptions&);
template TrainResult train<double>(RegNet<double>&, const SampleSource&, const TrainOptions&);
template ValidationResult validate<float>(RegNet<float>&, const SampleSource&, int);
template ValidationResult validate<double>(RegNet<double>&, const SampleSource&, int);
template double mean_loss<float>(RegNet<float>&, const SampleSource&, int);
template double mean_loss<double>(RegNet<double>&, const SampleSource&, int);

}  // namespace regnet
