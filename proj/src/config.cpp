#include "regnet/config.hpp"

#include <fstream>
#include <set>

namespace regnet {

namespace {

// Reads optional keys from a JSON object and rejects keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw Error("config: " + where_ + " must be an object");
  }
  ~ObjectReader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw Error("config: unknown key '" + key + "' in " + where_);
    }
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw Error("config: bad value for " + where_ + "." + key + ": " + e.what());
    }
  }

  const Json* child(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

Json to_json(const NiNBlockSpec& b) { return Json{{"kernel", b.kernel}, {"stride", b.stride}, {"channels", b.channels}}; }

NiNBlockSpec block_from_json(const Json& j, const std::string& where) {
  NiNBlockSpec b;
  ObjectReader r(j, where);
  r.get("kernel", b.kernel);
  r.get("stride", b.stride);
  r.get("channels", b.channels);
  return b;
}

std::vector<NiNBlockSpec> blocks_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) throw Error("config: " + where + " must be an array of blocks");
  std::vector<NiNBlockSpec> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(block_from_json(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Json to_json(const Vector3<double>& v) { return Json::array({v[0], v[1], v[2]}); }

}  // namespace

Json to_json(const RigidTransformd& h) {
  Json rows = Json::array();
  for (int r = 0; r < 3; ++r) {
    rows.push_back(Json::array({h.rotation()(r, 0), h.rotation()(r, 1), h.rotation()(r, 2), h.translation()[r]}));
  }
  return rows;
}

RigidTransformd transform_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw Error("config: a transform is three rows of four numbers");
  Matrix3<double> rot;
  Vector3<double> t;
  for (int r = 0; r < 3; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || row.size() != 4) throw Error("config: a transform is three rows of four numbers");
    for (int c = 0; c < 3; ++c) rot(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    t[r] = row[3].get<double>();
  }
  RigidTransformd h(rot, t);
  if (!h.is_valid(1e-6)) throw Error("config: transform rotation is not orthonormal");
  return {orthonormalize(rot), t};
}

Json to_json(const DecalibRange& r) {
  return Json{{"max_translation", r.max_translation}, {"max_rotation_deg", r.max_rotation_deg}};
}

DecalibRange range_from_json(const Json& j) {
  DecalibRange r;
  ObjectReader reader(j, "range");
  reader.get("max_translation", r.max_translation);
  reader.get("max_rotation_deg", r.max_rotation_deg);
  r.validate();
  return r;
}

Json to_json(const RegNetConfig& c) {
  Json j;
  j["input_height"] = c.input_height;
  j["input_width"] = c.input_width;
  auto blocks = [](const std::vector<NiNBlockSpec>& bs) {
    Json a = Json::array();
    for (const auto& b : bs) a.push_back(to_json(b));
    return a;
  };
  j["rgb_stream"] = blocks(c.rgb_stream);
  j["depth_stream"] = blocks(c.depth_stream);
  j["fusion_stack"] = blocks(c.fusion_stack);
  j["fc_hidden"] = c.fc_hidden;
  j["representation"] = std::string(representation_name(c.representation));
  j["range"] = to_json(c.range);
  j["balance"] = c.balance;
  return j;
}

RegNetConfig model_config_from_json(const Json& j) {
  RegNetConfig c = RegNetConfig::toy();
  ObjectReader r(j, "model");
  r.get("input_height", c.input_height);
  r.get("input_width", c.input_width);
  if (const Json* b = r.child("rgb_stream")) c.rgb_stream = blocks_from_json(*b, "model.rgb_stream");
  if (const Json* b = r.child("depth_stream")) c.depth_stream = blocks_from_json(*b, "model.depth_stream");
  if (const Json* b = r.child("fusion_stack")) c.fusion_stack = blocks_from_json(*b, "model.fusion_stack");
  r.get("fc_hidden", c.fc_hidden);
  std::string rep(representation_name(c.representation));
  r.get("representation", rep);
  c.representation = parse_representation(rep);
  if (const Json* range = r.child("range")) c.range = range_from_json(*range);
  r.get("balance", c.balance);
  c.validate();
  return c;
}

Json to_json(const SensorRig& rig) {
  const CameraIntrinsics& k = rig.camera;
  const LidarModel& l = rig.lidar;
  return Json{{"camera",
               {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}}},
              {"lidar",
               {{"layers", l.layers},
                {"elevation_min_deg", l.elevation_min_deg},
                {"elevation_max_deg", l.elevation_max_deg},
                {"azimuth_step_deg", l.azimuth_step_deg},
                {"max_range", l.max_range},
                {"pose", to_json(l.pose)},
                {"range_noise_std", l.range_noise_std},
                {"noise_seed", l.noise_seed}}},
              {"lidar_to_camera", to_json(rig.lidar_to_camera)}};
}

SensorRig rig_from_json(const Json& j) {
  SensorRig rig;
  ObjectReader r(j, "rig");
  if (const Json* cam = r.child("camera")) {
    ObjectReader c(*cam, "rig.camera");
    c.get("fx", rig.camera.fx);
    c.get("fy", rig.camera.fy);
    c.get("cx", rig.camera.cx);
    c.get("cy", rig.camera.cy);
    c.get("width", rig.camera.width);
    c.get("height", rig.camera.height);
  }
  if (const Json* lidar = r.child("lidar")) {
    ObjectReader l(*lidar, "rig.lidar");
    l.get("layers", rig.lidar.layers);
    l.get("elevation_min_deg", rig.lidar.elevation_min_deg);
    l.get("elevation_max_deg", rig.lidar.elevation_max_deg);
    l.get("azimuth_step_deg", rig.lidar.azimuth_step_deg);
    l.get("max_range", rig.lidar.max_range);
    if (const Json* pose = l.child("pose")) rig.lidar.pose = transform_from_json(*pose);
    l.get("range_noise_std", rig.lidar.range_noise_std);
    l.get("noise_seed", rig.lidar.noise_seed);
  }
  if (const Json* h = r.child("lidar_to_camera")) rig.lidar_to_camera = transform_from_json(*h);
  rig.camera.validate();
  rig.lidar.validate();
  return rig;
}

Json to_json(const Scene& scene) {
  Json j;
  j["seed"] = scene.seed;
  j["has_ground"] = scene.has_ground;
  j["ground_albedo_a"] = to_json(scene.ground_albedo_a);
  j["ground_albedo_b"] = to_json(scene.ground_albedo_b);
  j["ground_tile"] = scene.ground_tile;
  Json boxes = Json::array();
  for (const Box& b : scene.boxes) {
    Json faces = Json::array();
    for (const auto& a : b.face_albedo) faces.push_back(to_json(a));
    boxes.push_back(Json{{"center", to_json(b.center)},
                         {"half_extents", to_json(b.half_extents)},
                         {"yaw", b.yaw},
                         {"face_albedo", faces}});
  }
  j["boxes"] = boxes;
  Json walls = Json::array();
  for (const Wall& w : scene.walls) {
    walls.push_back(Json{{"center", to_json(w.center)},
                         {"yaw", w.yaw},
                         {"half_width", w.half_width},
                         {"half_height", w.half_height},
                         {"albedo", to_json(w.albedo)}});
  }
  j["walls"] = walls;
  return j;
}

Json to_json(const ProjectConfig& c) {
  Json j;
  j["rig"] = to_json(c.rig);
  j["scene"] = Json{{"min_boxes", c.scene.min_boxes},
                    {"max_boxes", c.scene.max_boxes},
                    {"min_walls", c.scene.min_walls},
                    {"max_walls", c.scene.max_walls},
                    {"min_visible_primitives", c.scene.min_visible_primitives},
                    {"min_visible_pixels", c.scene.min_visible_pixels},
                    {"max_retries", c.scene.max_retries}};
  j["model"] = to_json(c.model);
  j["densify_kernel"] = c.densify_kernel;
  const TrainingConfig& t = c.training;
  j["training"] = Json{{"steps", t.steps},
                       {"init_seed", t.init_seed},
                       {"scene_seed", t.scene_seed},
                       {"decalib_seed", t.decalib_seed},
                       {"adam",
                        {{"alpha", t.adam.alpha},
                         {"beta1", t.adam.beta1},
                         {"beta2", t.adam.beta2},
                         {"epsilon", t.adam.epsilon}}},
                       {"log_every", t.log_every},
                       {"validate_every", t.validate_every},
                       {"validation_samples", t.validation_samples},
                       {"validation_seed", t.validation_seed}};
  j["cascade"] = Json{{"experts", c.cascade.experts}, {"passes_per_stage", c.cascade.passes_per_stage}};
  j["filter"] = Json{{"mode", c.filter.mode}, {"window", c.filter.window}};
  j["evaluation"] = Json{{"sequence_frames", c.evaluation.sequence_frames},
                         {"runs", c.evaluation.runs},
                         {"seed", c.evaluation.seed}};
  return j;
}

ProjectConfig project_config_from_json(const Json& j) {
  ProjectConfig c;
  ObjectReader r(j, "config");
  if (const Json* rig = r.child("rig")) c.rig = rig_from_json(*rig);
  if (const Json* scene = r.child("scene")) {
    ObjectReader s(*scene, "scene");
    s.get("min_boxes", c.scene.min_boxes);
    s.get("max_boxes", c.scene.max_boxes);
    s.get("min_walls", c.scene.min_walls);
    s.get("max_walls", c.scene.max_walls);
    s.get("min_visible_primitives", c.scene.min_visible_primitives);
    s.get("min_visible_pixels", c.scene.min_visible_pixels);
    s.get("max_retries", c.scene.max_retries);
  }
  if (const Json* model = r.child("model")) c.model = model_config_from_json(*model);
  r.get("densify_kernel", c.densify_kernel);
  if (const Json* training = r.child("training")) {
    TrainingConfig& t = c.training;
    ObjectReader tr(*training, "training");
    tr.get("steps", t.steps);
    tr.get("init_seed", t.init_seed);
    tr.get("scene_seed", t.scene_seed);
    tr.get("decalib_seed", t.decalib_seed);
    if (const Json* adam = tr.child("adam")) {
      ObjectReader a(*adam, "training.adam");
      a.get("alpha", t.adam.alpha);
      a.get("beta1", t.adam.beta1);
      a.get("beta2", t.adam.beta2);
      a.get("epsilon", t.adam.epsilon);
    }
    tr.get("log_every", t.log_every);
    tr.get("validate_every", t.validate_every);
    tr.get("validation_samples", t.validation_samples);
    tr.get("validation_seed", t.validation_seed);
  }
  if (const Json* cascade = r.child("cascade")) {
    ObjectReader cr(*cascade, "cascade");
    cr.get("experts", c.cascade.experts);
    cr.get("passes_per_stage", c.cascade.passes_per_stage);
  }
  if (const Json* filter = r.child("filter")) {
    ObjectReader f(*filter, "filter");
    f.get("mode", c.filter.mode);
    f.get("window", c.filter.window);
  }
  if (const Json* eval = r.child("evaluation")) {
    ObjectReader e(*eval, "evaluation");
    e.get("sequence_frames", c.evaluation.sequence_frames);
    e.get("runs", c.evaluation.runs);
    e.get("seed", c.evaluation.seed);
  }
  if (c.densify_kernel < 1 || c.densify_kernel % 2 == 0) throw Error("config: densify_kernel must be odd and >= 1");
  if (c.model.input_height != c.rig.camera.height || c.model.input_width != c.rig.camera.width) {
    throw Error("config: model input size must match the camera image size");
  }
  return c;
}

ProjectConfig load_project_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return project_config_from_json(j);
}

void save_project_config(const ProjectConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write config file " + path.string());
  out << to_json(config).dump(2) << '\n';
}

}  // namespace regnet
