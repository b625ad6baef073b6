// Command-line front end: synth-gen, train, calibrate, evaluate,
// decalibrate, gradcheck.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "regnet/checkpoint.hpp"
#include "regnet/config.hpp"
#include "regnet/dataset.hpp"
#include "regnet/evaluation.hpp"
#include "regnet/gradcheck.hpp"
#include "regnet/image_io.hpp"
#include "regnet/training.hpp"

namespace fs = std::filesystem;
using namespace regnet;

namespace {

ProjectConfig load_config(const std::string& path) { return path.empty() ? ProjectConfig{} : load_project_config(path); }

/// 12 (3x4) or 16 (4x4) row-major numbers, inline or in a file; commas,
/// brackets and whitespace all separate.
RigidTransformd parse_transform(const std::string& arg) {
  std::string text = arg;
  if (fs::is_regular_file(arg)) {
    std::ifstream in(arg);
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  for (char& c : text) {
    if (c == ',' || c == '[' || c == ']' || c == ';') c = ' ';
  }
  std::istringstream in(text);
  std::vector<double> v;
  std::string token;
  while (in >> token) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw Error("transform '" + arg + "': '" + token + "' is not a number");
    }
  }
  if (v.size() != 12 && v.size() != 16) {
    throw Error("transform '" + arg + "' has " + std::to_string(v.size()) + " numbers, expected 12 (3x4) or 16 (4x4)");
  }
  Matrix3<double> r;
  Vector3<double> t;
  for (int row = 0; row < 3; ++row) {
    for (int c = 0; c < 3; ++c) r(row, c) = v[static_cast<std::size_t>(4 * row + c)];
    t[row] = v[static_cast<std::size_t>(4 * row + 3)];
  }
  const RigidTransformd h(r, t);
  if (!h.is_valid(1e-6)) throw Error("transform '" + arg + "' does not have an orthonormal rotation");
  return {orthonormalize(r), t};
}

std::string format_transform(const RigidTransformd& h) {
  std::string out;
  char buf[64];
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      std::snprintf(buf, sizeof(buf), "%s%.17g", c ? " " : "", c < 3 ? h.rotation()(r, c) : h.translation()[r]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::string format_metric(const MetricRecord& m) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "rotation deg (yaw pitch roll) %.4f %.4f %.4f  mean %.4f | translation m (x y z) %.4f %.4f %.4f  mean %.4f",
                m.rotation_deg[0], m.rotation_deg[1], m.rotation_deg[2], m.mean_rotation_deg, m.translation_m[0],
                m.translation_m[1], m.translation_m[2], m.mean_translation_m);
  return buf;
}

// ---------------------------------------------------------------------------

int cmd_synth_gen(const std::string& config_path, const std::string& out, int frames, std::optional<std::uint64_t> seed) {
  const ProjectConfig config = load_config(config_path);
  const std::uint64_t s = seed.value_or(config.training.scene_seed);
  write_synthetic_dataset(config, out, frames, s);
  std::printf("wrote %d frames to %s\n", frames, out.c_str());
  return 0;
}

struct TrainArgs {
  std::string config;
  std::string range;
  std::string out;
  std::string representation;
  std::optional<long> steps;
  std::optional<double> alpha;
  std::string log;
};

int cmd_train(const TrainArgs& a) {
  ProjectConfig config = load_config(a.config);
  RegNetConfig model_cfg = config.model;
  if (!a.range.empty()) model_cfg.range = parse_range(a.range);
  if (!a.representation.empty()) model_cfg.representation = parse_representation(a.representation);
  model_cfg.validate();
  TrainingConfig t = config.training;
  if (a.steps) t.steps = *a.steps;
  if (a.alpha) t.adam.alpha = *a.alpha;

  const SampleSettings settings = SampleSettings::for_model(model_cfg, config.densify_kernel);
  const SyntheticSampleSource source(config.rig, config.scene, settings, t.scene_seed, t.decalib_seed);
  const SyntheticSampleSource validation(config.rig, config.scene, settings, t.validation_seed,
                                         derive_seed(t.validation_seed, 1));
  RegNet<float> model(model_cfg, t.init_seed);

  const fs::path out(a.out);
  const fs::path log_path = a.log.empty() ? fs::path(a.out + ".log.jsonl") : fs::path(a.log);
  std::ofstream log(log_path);
  if (!log) throw Error("cannot write training log " + log_path.string());
  RecordWriter records(&log);

  TrainOptions opts;
  opts.steps = t.steps;
  opts.adam = t.adam;
  opts.log_every = t.log_every;
  opts.validate_every = t.validate_every;
  opts.validation = &validation;
  opts.validation_samples = t.validation_samples;
  opts.diagnostic_checkpoint = fs::path(a.out + ".nonfinite");
  opts.on_loss = [&](const LossRecord& r) {
    records.write(Json{{"type", "loss"}, {"step", r.step}, {"loss", r.loss}, {"window_mean", r.window_mean}});
    std::printf("step %ld  loss %.5f  mean %.5f\n", r.step, r.loss, r.window_mean);
    std::fflush(stdout);
  };
  opts.on_validation = [&](const ValidationResult& v) {
    records.write(Json{{"type", "validation"},
                       {"step", v.step},
                       {"rotation_mae_deg", v.rotation_mae_deg},
                       {"translation_mae_m", v.translation_mae_m},
                       {"loss", v.loss}});
    std::printf("validation step %ld  rotation MAE deg %.4f %.4f %.4f  translation MAE m %.4f %.4f %.4f\n", v.step,
                v.rotation_mae_deg[0], v.rotation_mae_deg[1], v.rotation_mae_deg[2], v.translation_mae_m[0],
                v.translation_mae_m[1], v.translation_mae_m[2]);
    std::fflush(stdout);
  };
  train(model, source, opts);
  write_checkpoint(model, out);
  std::printf("checkpoint written to %s\n", out.c_str());
  return 0;
}

struct CalibrateArgs {
  std::string config;
  std::string experts;
  std::string frame;
  int index = 0;
  std::string h_init;
  std::string overlay;
  std::string range;
  int passes = 1;
};

int cmd_calibrate(const CalibrateArgs& a) {
  const ProjectConfig config = load_config(a.config);
  const DatasetFrame df = resolve_frame(a.frame, a.index, config);
  const DecalibRange stub = a.range.empty() ? config.model.range : parse_range(a.range);
  const ExpertRegistry registry = parse_expert_list(a.experts, stub)(df.ground_truth);
  const RigidTransformd h_init = parse_transform(a.h_init);
  CascadeOptions opts;
  opts.passes_per_stage = a.passes;
  opts.densify_kernel = config.densify_kernel;
  opts.ground_truth = df.ground_truth;
  const CalibrationEstimate est = cascade(registry, h_init, df.frame, opts);
  std::printf("H_hat:\n%s", format_transform(est.estimate).c_str());
  std::printf("initial   %s\n", format_metric(evaluate(h_init, df.ground_truth)).c_str());
  for (std::size_t i = 0; i < est.stages.size(); ++i) {
    std::printf("stage %zu (%s)  %s\n", i + 1, est.stages[i].expert.c_str(), format_metric(*est.stages[i].error).c_str());
  }
  if (!a.overlay.empty()) {
    fs::create_directories(a.overlay);
    emit_overlay(df.frame.rgb, project_points(df.frame.cloud, h_init, df.frame.camera), fs::path(a.overlay) / "initial.png");
    emit_overlay(df.frame.rgb, project_points(df.frame.cloud, est.estimate, df.frame.camera),
                 fs::path(a.overlay) / "calibrated.png");
    emit_overlay(df.frame.rgb, project_points(df.frame.cloud, df.ground_truth, df.frame.camera),
                 fs::path(a.overlay) / "ground_truth.png");
    std::printf("overlays written to %s\n", a.overlay.c_str());
  }
  return 0;
}

struct EvaluateArgs {
  std::string config;
  std::string experts;
  std::string sequence;
  std::optional<int> frames;
  std::optional<int> runs;
  std::string range;
  std::string filter;
  std::optional<int> window;
  std::string records;
  bool compare = false;
  std::optional<long> steps;
  std::optional<long> validate_every;
  std::optional<int> validation_samples;
  std::string report;
};

int cmd_compare(const EvaluateArgs& a, const ProjectConfig& config) {
  ComparisonOptions o;
  o.rig = config.rig;
  o.scene = config.scene;
  o.model = config.model;
  if (!a.range.empty()) o.model.range = parse_range(a.range);
  o.densify_kernel = config.densify_kernel;
  o.adam = config.training.adam;
  o.init_seed = config.training.init_seed;
  o.scene_seed = config.training.scene_seed;
  o.decalib_seed = config.training.decalib_seed;
  o.validation_seed = config.training.validation_seed;
  if (a.steps) o.steps = *a.steps;
  if (a.validate_every) o.validate_every = *a.validate_every;
  if (a.validation_samples) o.validation_samples = *a.validation_samples;
  const std::string table = format_comparison(compare_representations(o));
  if (a.report.empty()) {
    std::fputs(table.c_str(), stdout);
  } else {
    std::ofstream out(a.report);
    if (!out) throw Error("cannot write report " + a.report);
    out << table;
    std::printf("report written to %s\n", a.report.c_str());
  }
  return 0;
}

int cmd_evaluate(const EvaluateArgs& a) {
  const ProjectConfig config = load_config(a.config);
  if (a.compare) return cmd_compare(a, config);
  if (a.experts.empty()) throw Error("evaluate: --experts is required (or use --compare-representations)");
  SequenceOptions o;
  o.rig = config.rig;
  o.scene = config.scene;
  o.range = a.range.empty() ? config.model.range : parse_range(a.range);
  o.frames = a.frames.value_or(config.evaluation.sequence_frames);
  o.runs = a.runs.value_or(config.evaluation.runs);
  o.seed = config.evaluation.seed;
  o.filter = parse_filter_mode(a.filter.empty() ? config.filter.mode : a.filter);
  o.window = a.window.value_or(config.filter.window);
  o.cascade.densify_kernel = config.densify_kernel;
  o.cascade.passes_per_stage = config.cascade.passes_per_stage;
  if (!a.sequence.empty()) {
    const std::string prefix = "synth:";
    if (a.sequence.rfind(prefix, 0) != 0) throw Error("evaluate: --sequence must be synth:SEED");
    try {
      o.seed = std::stoull(a.sequence.substr(prefix.size()));
    } catch (const std::exception&) {
      throw Error("evaluate: bad sequence seed in '" + a.sequence + "'");
    }
  }
  const RegistryFactory experts = parse_expert_list(a.experts, o.range);
  std::ofstream file;
  if (!a.records.empty()) {
    file.open(a.records);
    if (!file) throw Error("cannot write records " + a.records);
  }
  RecordWriter records(a.records.empty() ? nullptr : &file);
  const auto runs = evaluate_sequences(experts, o, &records);
  for (const auto& r : runs) {
    std::printf("run %d  initial  %s\n", r.run, format_metric(r.initial_error).c_str());
    std::printf("run %d  filtered %s\n", r.run, format_metric(r.filtered_error).c_str());
  }
  MetricRecord mean;
  for (const auto& r : runs) {
    for (int i = 0; i < 3; ++i) {
      mean.rotation_deg[i] += r.filtered_error.rotation_deg[i] / runs.size();
      mean.translation_m[i] += r.filtered_error.translation_m[i] / runs.size();
    }
    mean.mean_rotation_deg += r.filtered_error.mean_rotation_deg / runs.size();
    mean.mean_translation_m += r.filtered_error.mean_translation_m / runs.size();
  }
  std::printf("aggregate over %zu runs  %s\n", runs.size(), format_metric(mean).c_str());
  return 0;
}

int cmd_decalibrate(const std::string& h_gt_arg, const std::string& range, std::uint64_t seed) {
  const RigidTransformd h_gt = h_gt_arg.empty() ? SensorRig::default_lidar_to_camera() : parse_transform(h_gt_arg);
  Rng rng(seed);
  const RigidTransformd h_init = make_initial(h_gt, sample_decalib(rng, parse_range(range)));
  std::fputs(format_transform(h_init).c_str(), stdout);
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, int shapes, bool end_to_end) {
  bool ok = true;
  for (const auto& r : layer_gradient_suite(seed, shapes)) {
    std::printf("%-4s %-48s max rel err %.3e (tol %.0e, %d checked, %d skipped)\n", r.passed() ? "ok" : "FAIL",
                r.name.c_str(), r.max_relative_error, r.tolerance, r.checked, r.skipped);
    ok = ok && r.passed();
  }
  if (end_to_end) {
    const auto r = end_to_end_gradient_check(RegNetConfig::toy(), seed);
    std::printf("%-4s %-48s max rel err %.3e (tol %.0e, %d checked, %d skipped)\n", r.passed() ? "ok" : "FAIL",
                r.name.c_str(), r.max_relative_error, r.tolerance, r.checked, r.skipped);
    ok = ok && r.passed();
  }
  std::printf("%s\n", ok ? "gradcheck passed" : "gradcheck FAILED");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LiDAR-camera extrinsic calibration with two-stream CNN experts"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config;
  app.add_option("--config", config, "project configuration (JSON)")->check(CLI::ExistingFile);

  int frames = 10;
  std::optional<std::uint64_t> gen_seed;
  std::string gen_out;
  auto* synth = app.add_subcommand("synth-gen", "render synthetic frames in KITTI raw layout");
  synth->add_option("--out", gen_out, "output directory")->required();
  synth->add_option("--frames", frames, "number of frames")->check(CLI::PositiveNumber);
  synth->add_option("--seed", gen_seed, "scene seed (default: training.scene_seed)");

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "train one expert on streaming synthetic samples");
  train_cmd->add_option("--range", ta.range, "decalibration range X,Y (meters, degrees)");
  train_cmd->add_option("--out", ta.out, "checkpoint path")->required();
  train_cmd->add_option("--representation", ta.representation, "euler | quaternion | dual-quaternion");
  train_cmd->add_option("--steps", ta.steps, "training steps");
  train_cmd->add_option("--alpha", ta.alpha, "Adam learning rate");
  train_cmd->add_option("--log", ta.log, "loss trace (JSON lines; default CKPT.log.jsonl)");

  CalibrateArgs ca;
  auto* calib = app.add_subcommand("calibrate", "run the expert cascade on one frame");
  calib->add_option("--experts", ca.experts, "comma-separated checkpoints, oracle or identity")->required();
  calib->add_option("--frame", ca.frame, "synth:SEED or a frame directory")->required();
  calib->add_option("--index", ca.index, "frame index")->check(CLI::NonNegativeNumber);
  calib->add_option("--h-init", ca.h_init, "initial calibration: 12 numbers or a file")->required();
  calib->add_option("--overlay", ca.overlay, "write overlay images to this directory");
  calib->add_option("--range", ca.range, "range for oracle/identity experts X,Y");
  calib->add_option("--passes", ca.passes, "passes per expert")->check(CLI::PositiveNumber);

  EvaluateArgs ea;
  auto* eval = app.add_subcommand("evaluate", "fixed-decalibration sequence protocol, or the representation comparison");
  eval->add_option("--experts", ea.experts, "comma-separated checkpoints, oracle or identity");
  eval->add_option("--sequence", ea.sequence, "synth:SEED");
  eval->add_option("--frames", ea.frames, "frames per sequence")->check(CLI::PositiveNumber);
  eval->add_option("--runs", ea.runs, "number of runs")->check(CLI::PositiveNumber);
  eval->add_option("--range", ea.range, "decalibration range X,Y");
  eval->add_option("--filter", ea.filter, "median | avg");
  eval->add_option("--window", ea.window, "filter window in frames, 0 = whole sequence")->check(CLI::NonNegativeNumber);
  eval->add_option("--records", ea.records, "write metric records (JSON lines)");
  eval->add_flag("--compare-representations", ea.compare, "train all three representations and report MAE");
  eval->add_option("--steps", ea.steps, "training steps per representation (comparison)");
  eval->add_option("--validate-every", ea.validate_every, "validation interval (comparison)");
  eval->add_option("--validation-samples", ea.validation_samples, "held-out samples (comparison)");
  eval->add_option("--report", ea.report, "write the comparison table here");

  std::string h_gt, range = "0.3,5";
  std::uint64_t seed = 0;
  auto* decal = app.add_subcommand("decalibrate", "print a sampled initial calibration H_gt * phi");
  decal->add_option("--h-gt", h_gt, "ground truth: 12 numbers or a file (default: the synthetic rig)");
  decal->add_option("--range", range, "range X,Y");
  decal->add_option("--seed", seed, "sampling seed");

  std::uint64_t gc_seed = 1;
  int gc_shapes = 5;
  bool gc_skip_e2e = false;
  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of every layer and the full network");
  grad->add_option("--seed", gc_seed, "seed");
  grad->add_option("--shapes", gc_shapes, "random shapes per layer")->check(CLI::PositiveNumber);
  grad->add_flag("--skip-end-to-end", gc_skip_e2e, "only the per-layer checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*synth) return cmd_synth_gen(config, gen_out, frames, gen_seed);
    if (*train_cmd) {
      ta.config = config;
      return cmd_train(ta);
    }
    if (*calib) {
      ca.config = config;
      return cmd_calibrate(ca);
    }
    if (*eval) {
      ea.config = config;
      return cmd_evaluate(ea);
    }
    if (*decal) return cmd_decalibrate(h_gt, range, seed);
    if (*grad) return cmd_gradcheck(gc_seed, gc_shapes, !gc_skip_e2e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
