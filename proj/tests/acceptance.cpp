// Acceptance suite: one PASS/FAIL line per criterion, with the measured value
// and the runtime. Arguments select criteria by number (default: all);
// --workdir DIR sets where trained checkpoints and reports go; --reuse
// loads experts an earlier run left there instead of training them.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "regnet/checkpoint.hpp"
#include "regnet/evaluation.hpp"
#include "regnet/gradcheck.hpp"
#include "regnet/kitti.hpp"
#include "regnet/training.hpp"

namespace fs = std::filesystem;
using namespace regnet;

namespace {

struct Outcome {
  bool pass = false;
  std::string measured;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

void progress(const std::string& line) {
  std::printf("  .. %s\n", line.c_str());
  std::fflush(stdout);
}

fs::path g_workdir;
bool g_reuse = false;  // load experts trained by an earlier run

// The raised learning rate of the memorization criterion.
constexpr double kMemorizationAlpha = 3e-4;

// ---------------------------------------------------------------------------

RigidTransformd bounded_transform(Rng& rng, double max_rot_deg, double max_trans) {
  const double a = deg2rad(max_rot_deg);
  return euler_to_transform(EulerPose<double>{uniform(rng, -a, a), uniform(rng, -a, a), uniform(rng, -a, a),
                                              Vector3<double>(uniform(rng, -max_trans, max_trans),
                                                              uniform(rng, -max_trans, max_trans),
                                                              uniform(rng, -max_trans, max_trans))});
}

Outcome geometry_closure() {
  Rng rng(101);
  double euler = 0.0, quat = 0.0, dual = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const RigidTransformd h = bounded_transform(rng, 20.0, 1.5);
    euler = std::max(euler, max_entry_error(euler_to_transform(transform_to_euler(h)), h));
    quat = std::max(quat, max_entry_error(transform_from_quat(transform_to_quat(h)), h));
    dual = std::max(dual, max_entry_error(transform_from_dualquat(dualquat_from_transform(h)), h));
  }
  const double worst = std::max({euler, quat, dual});
  return {worst < 1e-9, fmt("max entry error euler %.2e quat %.2e dualquat %.2e (< 1e-9)", euler, quat, dual)};
}

Outcome refinement_algebra() {
  Rng rng(202);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const RigidTransformd h_gt = bounded_transform(rng, 180.0, 5.0);
    const RigidTransformd phi = sample_decalib(rng, DecalibRange{1.5, 20.0});
    const RigidTransformd h_init = make_initial(h_gt, phi);
    worst = std::max(worst, max_entry_error(compose(h_init, invert(phi)), h_gt));
    worst = std::max(worst, max_entry_error(apply_correction(h_init, phi), h_gt));
  }
  return {worst < 1e-12, fmt("max entry error %.2e (< 1e-12)", worst)};
}

Outcome projection_oracle() {
  Rng rng(303);
  const SensorRig rig;
  const CameraIntrinsics& k = rig.camera;
  int mismatched = 0;
  long hits = 0, collisions = 0;
  for (int c = 0; c < 1000; ++c) {
    PointCloud cloud;
    cloud.points.resize(3, 1000);
    cloud.intensity = Eigen::VectorXd::Zero(1000);
    const RigidTransformd h = make_initial(rig.lidar_to_camera, sample_decalib(rng, DecalibRange{0.3, 5.0}));
    for (int i = 0; i < 1000; ++i) {
      if (i >= 100 && uniform01(rng) < 0.3) {
        // Same ray as an earlier point at another range, so pixels collide.
        const Vector3<double> base = cloud.points.col(static_cast<Eigen::Index>(uniform(rng, 0, i - 1)));
        cloud.points.col(i) = base * uniform(rng, 0.5, 2.0);
      } else {
        // LiDAR frame: x forward, mostly in front, some behind.
        cloud.points.col(i) = Vector3<double>(uniform(rng, -10, 60), uniform(rng, -30, 30), uniform(rng, -2.5, 3));
      }
    }
    const SparseDepthMap got = project_points(cloud, h, k);
    const SparseDepthMap want = test::project_oracle(cloud, h, k);
    mismatched += (got.values != want.values).count();
    const long filled = (want.values > 0.0).count();
    hits += filled;
    long in_image = 0;
    for (int i = 0; i < 1000; ++i) {
      const Vector3<double> p = apply_point(h, Vector3<double>(cloud.points.col(i)));
      if (!(p.z() > kNearPlane)) continue;
      const double u = std::floor(k.fx * p.x() / p.z() + k.cx + 0.5), v = std::floor(k.fy * p.y() / p.z() + k.cy + 0.5);
      in_image += (u >= 0 && v >= 0 && u < k.width && v < k.height) ? 1 : 0;
    }
    collisions += in_image - filled;
  }
  return {mismatched == 0, fmt("%d mismatched pixels over 1000 clouds (%ld filled pixels, %ld z-buffer collisions)",
                               mismatched, hits, collisions)};
}

Outcome gradient_suite() {
  int failed = 0, results = 0;
  double worst = 0.0;
  for (const auto& r : layer_gradient_suite(404, 5)) {
    ++results;
    failed += r.passed() ? 0 : 1;
    worst = std::max(worst, r.max_relative_error);
  }
  const GradCheckResult e2e = end_to_end_gradient_check(RegNetConfig::toy(), 404);
  return {failed == 0 && e2e.passed(),
          fmt("layers: %d/%d pass, max rel err %.2e (<= 1e-4); end-to-end toy: max rel err %.2e (<= 1e-3, %d checked, "
              "%d skipped)",
              results - failed, results, worst, e2e.max_relative_error, e2e.checked, e2e.skipped)};
}

Outcome memorization() {
  const RegNetConfig cfg = RegNetConfig::toy();
  const SyntheticSampleSource stream(SensorRig{}, SceneConfig{}, SampleSettings::for_model(cfg), 505, 506);
  std::vector<TrainingSample> samples;
  for (int i = 0; i < 10; ++i) samples.push_back(stream.sample(i));
  const FixedSampleSource source(samples);
  auto run = [&](double alpha) {
    RegNet<float> model(cfg, 5);
    const double initial = mean_loss(model, source, 10);
    TrainOptions opt;
    opt.steps = 2000;
    opt.adam.alpha = alpha;
    opt.log_every = 500;
    opt.on_loss = [&](const LossRecord& r) { progress(fmt("alpha %.0e step %ld window loss %.4f", alpha, r.step, r.window_mean)); };
    train(model, source, opt);
    return std::make_pair(initial, mean_loss(model, source, 10));
  };
  const auto [base0, base1] = run(1e-5);
  const auto [raised0, raised1] = run(kMemorizationAlpha);
  const double ratio = raised1 / raised0;
  return {ratio < 0.01,
          fmt("mean loss initial -> final: alpha 1e-5 %.4g -> %.4g (%.3f), alpha %.0e %.4g -> %.4g (%.2e, gate < 0.01)",
              base0, base1, base1 / base0, kMemorizationAlpha, raised0, raised1, ratio)};
}

// Trained experts are shared by the learning, cascade and filtering criteria.
struct Experts {
  std::shared_ptr<RegNet<float>> coarse, fine;
};

std::shared_ptr<RegNet<float>> train_expert(const DecalibRange& range, const std::string& name) {
  const fs::path path = g_workdir / (name + ".ckpt");
  if (g_reuse && fs::exists(path)) {
    progress("reusing " + path.string());
    return read_checkpoint<float>(path);
  }
  ProjectConfig config;
  RegNetConfig model_cfg = config.model;
  model_cfg.range = range;
  const TrainingConfig& t = config.training;
  const SampleSettings settings = SampleSettings::for_model(model_cfg, config.densify_kernel);
  const SyntheticSampleSource source(config.rig, config.scene, settings, t.scene_seed, t.decalib_seed);
  auto model = std::make_shared<RegNet<float>>(model_cfg, t.init_seed);
  TrainOptions opt;
  opt.steps = t.steps;
  opt.adam = t.adam;
  opt.log_every = 2000;
  opt.on_loss = [&](const LossRecord& r) { progress(fmt("%s step %ld window loss %.4f", name.c_str(), r.step, r.window_mean)); };
  train(*model, source, opt);
  write_checkpoint(*model, path);
  return model;
}

Experts& experts() {
  static Experts e;
  return e;
}

std::shared_ptr<RegNet<float>> coarse_expert() {
  if (!experts().coarse) experts().coarse = train_expert(DecalibRange{0.3, 5.0}, "expert_coarse");
  return experts().coarse;
}

std::shared_ptr<RegNet<float>> fine_expert() {
  if (!experts().fine) experts().fine = train_expert(DecalibRange{0.1, 2.0}, "expert_fine");
  return experts().fine;
}

RegistryFactory trained_cascade() {
  auto coarse = coarse_expert();
  auto fine = fine_expert();
  return [coarse, fine](const RigidTransformd&) {
    ExpertRegistry registry;
    registry.add(Expert{coarse->config().range, std::make_shared<NetworkRegressor<float>>(coarse), "coarse"});
    registry.add(Expert{fine->config().range, std::make_shared<NetworkRegressor<float>>(fine), "fine"});
    return registry;
  };
}

Outcome learning_signal() {
  auto model = coarse_expert();
  const ProjectConfig config;
  const SampleSettings settings = SampleSettings::for_model(model->config(), config.densify_kernel);
  const SyntheticSampleSource held_out(config.rig, config.scene, settings, config.training.validation_seed,
                                       derive_seed(config.training.validation_seed, 1));
  const ValidationResult v = validate(*model, held_out, 200);
  const ValidationResult zero = zero_predictor(held_out, 200);
  const double median = v.median_rotation_mae_deg();
  return {median < 0.5 * 2.5,
          fmt("rotation MAE deg yaw %.3f pitch %.3f roll %.3f, median %.3f (< 1.25); zero predictor median %.3f; "
              "translation MAE m %.3f %.3f %.3f",
              v.rotation_mae_deg[0], v.rotation_mae_deg[1], v.rotation_mae_deg[2], median,
              zero.median_rotation_mae_deg(), v.translation_mae_m[0], v.translation_mae_m[1], v.translation_mae_m[2])};
}

Outcome cascade_benefit() {
  const RegistryFactory factory = trained_cascade();
  const Clock::time_point t0 = Clock::now();
  const ProjectConfig config;
  const auto trials = cascade_trials(factory, config.rig, config.scene, DecalibRange{0.3, 5.0}, 50, 707);
  std::vector<double> stage1, final_err;
  int improved = 0;
  for (const auto& t : trials) {
    stage1.push_back(t.stage_errors.front().mean_rotation_deg);
    final_err.push_back(t.stage_errors.back().mean_rotation_deg);
    improved += final_err.back() < stage1.back() ? 1 : 0;
  }
  const double p = sign_test_p_value(improved, static_cast<int>(trials.size()));
  const double m1 = median(stage1), m2 = median(final_err);
  const double elapsed = seconds_since(t0);
  return {m2 < m1 && p < 0.05 && elapsed < 900,
          fmt("median mean-axis rotation error stage 1 %.3f deg, final %.3f deg; %d/%zu trials improved, sign test "
              "p = %.2e (< 0.05); %.0f s after training (< 900)",
              m1, m2, improved, trials.size(), p, elapsed)};
}

Outcome temporal_filtering() {
  const RegistryFactory factory = trained_cascade();
  const Clock::time_point t0 = Clock::now();
  SequenceOptions o;
  o.frames = 100;
  o.seed = 808;
  o.filter = FilterMode::kMedian;
  o.outlier_frames = {7, 23, 41, 66, 88};
  const SequenceRun run = run_sequence(factory, o, 0);

  // Each filtered component must stay within the inlier order statistics a
  // median can reach when the outliers all fall on one side; a filter that
  // let an outlier through would leave that band.
  const std::set<int> outliers(o.outlier_frames.begin(), o.outlier_frames.end());
  const auto filtered = TemporalFilter::components(invert(run.filtered) * run.h_init);
  bool within = true;
  for (int c = 0; c < 6; ++c) {
    std::vector<double> inliers;
    for (int f = 0; f < o.frames; ++f) {
      if (!outliers.count(f)) inliers.push_back(TemporalFilter::components(invert(run.estimates[f]) * run.h_init)[c]);
    }
    std::sort(inliers.begin(), inliers.end());
    const std::size_t mid = inliers.size() / 2, m = outliers.size();
    within = within && filtered[c] >= inliers[mid - m] && filtered[c] <= inliers[mid + m];
  }
  // The same sequence through a moving average shows what the outliers do
  // when they are not rejected.
  SequenceOptions avg = o;
  avg.filter = FilterMode::kMovingAverage;
  const SequenceRun averaged = run_sequence(factory, avg, 0);

  const auto& fe = run.filtered_error;
  const auto& med = run.median_frame_rotation_deg;
  const auto& med_t = run.median_frame_translation_m;
  bool not_worse = true;
  for (int i = 0; i < 3; ++i) {
    not_worse = not_worse && fe.rotation_deg[i] <= med[i] && fe.translation_m[i] <= med_t[i];
  }
  const double elapsed = seconds_since(t0);
  return {not_worse && within && elapsed < 300,
          fmt("filtered rotation deg %.3f %.3f %.3f vs per-frame median %.3f %.3f %.3f; translation m %.3f %.3f %.3f vs "
              "%.3f %.3f %.3f; outliers rejected: %s (moving average instead: mean rotation error %.3f deg); %.0f s after training (< 300)",
              fe.rotation_deg[0], fe.rotation_deg[1], fe.rotation_deg[2], med[0], med[1], med[2], fe.translation_m[0],
              fe.translation_m[1], fe.translation_m[2], med_t[0], med_t[1], med_t[2], within ? "yes" : "no",
              averaged.filtered_error.mean_rotation_deg, elapsed)};
}

Outcome representation_harness() {
  ComparisonOptions o;
  auto report = [&](const std::string& name) {
    const std::string table = format_comparison(compare_representations(o));
    const fs::path path = g_workdir / name;
    std::ofstream(path) << table;
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string a = report("representations_a.txt");
  progress("first comparison written");
  const std::string b = report("representations_b.txt");
  std::printf("%s", a.c_str());
  const long rows = std::count(a.begin(), a.end(), '\n');
  const bool complete = a.find("euler") != std::string::npos && a.find("quaternion") != std::string::npos &&
                        a.find("dual-quaternion") != std::string::npos;
  return {!a.empty() && complete && a == b,
          fmt("report %ld lines, all three representations: %s, identical across two runs: %s", rows,
              complete ? "yes" : "no", a == b ? "yes" : "no")};
}

Outcome kitti_roundtrip() {
  Rng rng(1010);
  const fs::path dir = g_workdir / "kitti";
  fs::create_directories(dir);
  PointCloud cloud;
  cloud.points.resize(3, 5000);
  cloud.intensity.resize(5000);
  for (Eigen::Index i = 0; i < 5000; ++i) {
    // Float32 values, so the binary format holds them exactly.
    for (int r = 0; r < 3; ++r) cloud.points(r, i) = static_cast<float>(uniform(rng, -80, 80));
    cloud.intensity[i] = static_cast<float>(uniform01(rng));
  }
  write_velodyne(cloud, dir / "scan.bin");
  const PointCloud back = read_velodyne(dir / "scan.bin");
  const bool scan_exact = back.points == cloud.points && back.intensity == cloud.intensity &&
                          fs::file_size(dir / "scan.bin") == 16u * 5000u;

  double exact_err = 0.0, kitti_err = 0.0;
  const CameraIntrinsics k = SensorRig{}.camera;
  for (int i = 0; i < 100; ++i) {
    const RigidTransformd h = bounded_transform(rng, 180.0, 3.0);
    write_kitti_calib(k, h, dir / "c2c.txt", dir / "v2c.txt", CalibPrecision::kExact);
    exact_err = std::max(exact_err, max_entry_error(read_kitti_calib(dir / "c2c.txt", dir / "v2c.txt").velo_to_cam, h));
    write_kitti_calib(k, h, dir / "c2c.txt", dir / "v2c.txt", CalibPrecision::kKitti);
    kitti_err = std::max(kitti_err, max_entry_error(read_kitti_calib(dir / "c2c.txt", dir / "v2c.txt").velo_to_cam, h));
  }
  // KITTI's %e with six fractional digits: relative 5e-7 of entries up to 3.
  return {scan_exact && exact_err == 0.0 && kitti_err < 1.5e-6,
          fmt("velodyne bit-exact: %s; calib max entry error exact %.1e (== 0), KITTI precision %.2e (< 1.5e-6)",
              scan_exact ? "yes" : "no", exact_err, kitti_err)};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    const char* title;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::map<int, Criterion> criteria = {
      {1, {"geometry closure (1e4 transforms, 3 representations)", 10, geometry_closure}},
      {2, {"refinement algebra (1e3 pairs)", 5, refinement_algebra}},
      {3, {"projection matches z-buffer oracle (1e3 clouds x 1e3 points)", 30, projection_oracle}},
      {4, {"gradient suite", 120, gradient_suite}},
      {5, {"memorization of 10 samples in 2000 steps", 600, memorization}},
      {6, {"learning signal of one expert", 2700, learning_signal}},
      {7, {"cascade benefit over 50 paired trials", 0, cascade_benefit}},
      {8, {"temporal filtering with 5 outlier frames", 0, temporal_filtering}},
      {9, {"representation comparison report", 0, representation_harness}},
      {10, {"KITTI format roundtrips", 5, kitti_roundtrip}},
  };

  std::vector<int> selected;
  g_workdir = fs::temp_directory_path() / "regnet_acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--workdir" && i + 1 < argc) {
      g_workdir = argv[++i];
    } else if (arg == "--reuse") {
      g_reuse = true;
    } else {
      selected.push_back(std::stoi(arg));
    }
  }
  if (selected.empty()) {
    for (const auto& [n, c] : criteria) selected.push_back(n);
  }
  fs::create_directories(g_workdir);

  int failed = 0;
  std::vector<std::string> summary;
  for (int n : selected) {
    const auto it = criteria.find(n);
    if (it == criteria.end()) {
      std::fprintf(stderr, "unknown criterion %d\n", n);
      return 2;
    }
    const Criterion& c = it->second;
    std::printf("criterion %d: %s\n", n, c.title);
    std::fflush(stdout);
    const Clock::time_point t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double elapsed = seconds_since(t0);
    // Criteria without a budget either depend on trained experts (whose
    // training is budgeted by criterion 6) or have none.
    const bool in_budget = c.budget_s <= 0 || elapsed <= c.budget_s;
    if (!in_budget) o.measured += fmt("; over the %.0f s budget", c.budget_s);
    const bool pass = o.pass && in_budget;
    failed += pass ? 0 : 1;
    const std::string line = fmt("%s %2d  %-60s %8.1f s  ", pass ? "PASS" : "FAIL", n, c.title, elapsed) + o.measured;
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    summary.push_back(line);
  }
  std::printf("\nsummary\n");
  for (const auto& line : summary) std::printf("%s\n", line.c_str());
  std::printf("%d of %zu criteria failed\n", failed, selected.size());
  return failed == 0 ? 0 : 1;
}
