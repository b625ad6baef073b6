#include "regnet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <sstream>

#include "regnet/checkpoint.hpp"

namespace regnet {

Json to_json(const MetricRecord& m) {
  return Json{{"rotation_deg", m.rotation_deg},
              {"translation_m", m.translation_m},
              {"mean_rotation_deg", m.mean_rotation_deg},
              {"mean_translation_m", m.mean_translation_m}};
}

void RecordWriter::write(const Json& record) {
  if (out_) *out_ << record.dump() << '\n';
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

DecalibRange halved(const DecalibRange& r) { return {r.max_translation / 2.0, r.max_rotation_deg / 2.0}; }

}  // namespace

RegistryFactory parse_expert_list(const std::string& list, const DecalibRange& stub_range) {
  struct Entry {
    std::string kind;  // "oracle", "identity" or "network"
    DecalibRange range;
    std::shared_ptr<Regressor> network;
    std::string name;
  };
  std::vector<Entry> entries;
  for (const std::string& item : split(list, ',')) {
    Entry e;
    e.name = item;
    if (item == "oracle" || item == "identity") {
      e.kind = item;
      e.range = entries.empty() ? stub_range : halved(entries.back().range);
    } else {
      if (!std::filesystem::exists(item)) throw Error("expert checkpoint '" + item + "' does not exist");
      auto model = read_checkpoint<float>(item);
      e.kind = "network";
      e.range = model->config().range;
      e.network = std::make_shared<NetworkRegressor<float>>(model);
      e.name = std::filesystem::path(item).filename().string();
    }
    entries.push_back(std::move(e));
  }
  if (entries.empty()) throw Error("expert list is empty");
  // Validate ordering once, up front.
  {
    ExpertRegistry check;
    for (const Entry& e : entries) check.add({e.range, std::make_shared<IdentityRegressor>(), e.name});
  }
  return [entries](const RigidTransformd& ground_truth) {
    ExpertRegistry reg;
    for (const Entry& e : entries) {
      std::shared_ptr<Regressor> r;
      if (e.kind == "oracle") {
        r = std::make_shared<OracleRegressor>(ground_truth);
      } else if (e.kind == "identity") {
        r = std::make_shared<IdentityRegressor>();
      } else {
        r = e.network;
      }
      reg.add({e.range, r, e.name});
    }
    return reg;
  };
}

RegistryFactory single_expert(std::shared_ptr<Regressor> regressor, const DecalibRange& range, const std::string& name) {
  return [=](const RigidTransformd&) { return ExpertRegistry({{range, regressor, name}}); };
}

RegistryFactory oracle_experts(const std::vector<DecalibRange>& ranges) {
  return [=](const RigidTransformd& gt) {
    ExpertRegistry reg;
    for (std::size_t i = 0; i < ranges.size(); ++i) {
      reg.add({ranges[i], std::make_shared<OracleRegressor>(gt), "oracle" + std::to_string(i)});
    }
    return reg;
  };
}

// ---------------------------------------------------------------------------

namespace {

std::array<double, 3> axis_medians(const std::vector<MetricRecord>& records, bool rotation) {
  std::array<double, 3> out{};
  for (int a = 0; a < 3; ++a) {
    std::vector<double> v;
    for (const auto& m : records) v.push_back(rotation ? m.rotation_deg[a] : m.translation_m[a]);
    out[a] = median(std::move(v));
  }
  return out;
}

Json stages_json(const CalibrationEstimate& est) {
  Json stages = Json::array();
  for (const auto& s : est.stages) {
    Json j{{"expert", s.expert}};
    if (s.error) j["error"] = to_json(*s.error);
    stages.push_back(j);
  }
  return stages;
}

}  // namespace

SequenceRun run_sequence(const RegistryFactory& experts, const SequenceOptions& options, int run,
                         RecordWriter* records) {
  if (options.frames < 1) throw Error("sequence: frame count must be >= 1");
  const RigidTransformd& h_gt = options.rig.lidar_to_camera;
  const ExpertRegistry registry = experts(h_gt);
  SequenceRun out;
  out.run = run;
  Rng rng(derive_seed(options.seed ^ 0xdeca1bull, static_cast<std::uint64_t>(run)));
  out.decalib = sample_decalib(rng, options.range);
  out.h_init = make_initial(h_gt, out.decalib);
  out.initial_error = evaluate(out.h_init, h_gt);

  CascadeOptions cascade_options = options.cascade;
  cascade_options.ground_truth = h_gt;
  TemporalFilter filter(options.filter, options.window, out.h_init);
  const std::uint64_t run_seed = derive_seed(options.seed, static_cast<std::uint64_t>(run));
  for (int f = 0; f < options.frames; ++f) {
    const SyntheticFrame synthetic = make_frame(derive_seed(run_seed, static_cast<std::uint64_t>(f)), options.scene,
                                                options.rig);
    const CalibrationEstimate est = cascade(registry, out.h_init, to_frame(synthetic, options.rig), cascade_options);
    RigidTransformd estimate = est.estimate;
    const bool outlier =
        std::find(options.outlier_frames.begin(), options.outlier_frames.end(), f) != options.outlier_frames.end();
    if (outlier) estimate = estimate * options.outlier_offset;
    const RigidTransformd filtered = filter.update(estimate);
    const MetricRecord error = evaluate(estimate, h_gt);
    const MetricRecord filtered_error = evaluate(filtered, h_gt);
    out.estimates.push_back(estimate);
    out.frame_errors.push_back(error);
    if (records) {
      records->write(Json{{"type", "frame"},
                          {"run", run},
                          {"frame", f},
                          {"outlier", outlier},
                          {"stages", stages_json(est)},
                          {"estimate", to_json(estimate)},
                          {"error", to_json(error)},
                          {"filtered", to_json(filtered)},
                          {"filtered_error", to_json(filtered_error)}});
    }
  }
  out.filtered = filter.current();
  out.filtered_error = evaluate(out.filtered, h_gt);
  out.median_frame_rotation_deg = axis_medians(out.frame_errors, true);
  out.median_frame_translation_m = axis_medians(out.frame_errors, false);
  if (records) {
    records->write(Json{{"type", "run"},
                        {"run", run},
                        {"decalib", to_json(out.decalib)},
                        {"h_init", to_json(out.h_init)},
                        {"initial_error", to_json(out.initial_error)},
                        {"filtered", to_json(out.filtered)},
                        {"filtered_error", to_json(out.filtered_error)},
                        {"median_frame_rotation_deg", out.median_frame_rotation_deg},
                        {"median_frame_translation_m", out.median_frame_translation_m}});
  }
  return out;
}

std::vector<SequenceRun> evaluate_sequences(const RegistryFactory& experts, const SequenceOptions& options,
                                            RecordWriter* records) {
  if (options.runs < 1) throw Error("evaluate: run count must be >= 1");
  std::vector<SequenceRun> runs;
  for (int r = 0; r < options.runs; ++r) runs.push_back(run_sequence(experts, options, r, records));
  if (records) {
    std::array<double, 3> rot{}, trans{};
    double mean_rot = 0.0, mean_trans = 0.0;
    for (const auto& r : runs) {
      for (int a = 0; a < 3; ++a) {
        rot[a] += r.filtered_error.rotation_deg[a] / options.runs;
        trans[a] += r.filtered_error.translation_m[a] / options.runs;
      }
      mean_rot += r.filtered_error.mean_rotation_deg / options.runs;
      mean_trans += r.filtered_error.mean_translation_m / options.runs;
    }
    records->write(Json{{"type", "aggregate"},
                        {"runs", options.runs},
                        {"frames", options.frames},
                        {"filtered_rotation_deg", rot},
                        {"filtered_translation_m", trans},
                        {"mean_rotation_deg", mean_rot},
                        {"mean_translation_m", mean_trans}});
  }
  return runs;
}

// ---------------------------------------------------------------------------

std::vector<CascadeTrial> cascade_trials(const RegistryFactory& experts, const SensorRig& rig, const SceneConfig& scene,
                                         const DecalibRange& range, int trials, std::uint64_t seed,
                                         const CascadeOptions& options) {
  const RigidTransformd& h_gt = rig.lidar_to_camera;
  const ExpertRegistry registry = experts(h_gt);
  CascadeOptions opts = options;
  opts.ground_truth = h_gt;
  std::vector<CascadeTrial> out;
  for (int t = 0; t < trials; ++t) {
    const auto i = static_cast<std::uint64_t>(t);
    const SyntheticFrame synthetic = make_frame(derive_seed(seed, i), scene, rig);
    Rng rng(derive_seed(seed ^ 0xca5cadeull, i));
    const RigidTransformd h_init = make_initial(h_gt, sample_decalib(rng, range));
    const CalibrationEstimate est = cascade(registry, h_init, to_frame(synthetic, rig), opts);
    CascadeTrial trial;
    trial.initial_error = evaluate(h_init, h_gt);
    for (const auto& s : est.stages) trial.stage_errors.push_back(*s.error);
    out.push_back(std::move(trial));
  }
  return out;
}

double sign_test_p_value(int successes, int trials) {
  if (trials < 0 || successes < 0 || successes > trials) throw Error("sign test: need 0 <= successes <= trials");
  // Sum of C(n, k) / 2^n for k >= successes, in log space.
  double p = 0.0;
  for (int k = successes; k <= trials; ++k) {
    p += std::exp(std::lgamma(trials + 1.0) - std::lgamma(k + 1.0) - std::lgamma(trials - k + 1.0) -
                  trials * std::log(2.0));
  }
  return std::min(1.0, p);
}

// ---------------------------------------------------------------------------

std::vector<ComparisonRow> compare_representations(const ComparisonOptions& options) {
  std::vector<ComparisonRow> rows;
  for (Representation rep : {Representation::kEuler, Representation::kQuaternion, Representation::kDualQuaternion}) {
    RegNetConfig cfg = options.model;
    cfg.representation = rep;
    const SampleSettings settings = SampleSettings::for_model(cfg, options.densify_kernel);
    const SyntheticSampleSource source(options.rig, options.scene, settings, options.scene_seed, options.decalib_seed);
    const SyntheticSampleSource validation(options.rig, options.scene, settings, options.validation_seed,
                                           derive_seed(options.validation_seed, 1));
    RegNet<float> model(cfg, options.init_seed);
    TrainOptions train_options;
    train_options.steps = options.steps;
    train_options.adam = options.adam;
    train_options.log_every = std::max(1L, options.steps);
    train_options.validate_every = options.validate_every;
    train_options.validation = &validation;
    train_options.validation_samples = options.validation_samples;
    // Step 0: the untrained model.
    const ValidationResult initial = validate(model, validation, options.validation_samples);
    rows.push_back({rep, 0, initial.rotation_mae_deg, initial.translation_mae_m});
    const TrainResult result = train(model, source, train_options);
    for (const auto& v : result.validation) rows.push_back({rep, v.step, v.rotation_mae_deg, v.translation_mae_m});
  }
  return rows;
}

std::string format_comparison(const std::vector<ComparisonRow>& rows) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof(line), "%-15s %8s %9s %9s %9s %9s %9s %9s %9s\n", "representation", "step", "yaw_deg",
                "pitch_deg", "roll_deg", "mean_deg", "tx_m", "ty_m", "tz_m");
  os << line;
  for (const auto& r : rows) {
    const double mean = (r.rotation_mae_deg[0] + r.rotation_mae_deg[1] + r.rotation_mae_deg[2]) / 3.0;
    std::snprintf(line, sizeof(line), "%-15s %8ld %9.4f %9.4f %9.4f %9.4f %9.5f %9.5f %9.5f\n",
                  std::string(representation_name(r.representation)).c_str(), r.step, r.rotation_mae_deg[0],
                  r.rotation_mae_deg[1], r.rotation_mae_deg[2], mean, r.translation_mae_m[0], r.translation_mae_m[1],
                  r.translation_mae_m[2]);
    os << line;
  }
  return os.str();
}

}  // namespace regnet
