#include "segloc/pipeline/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "segloc/pipeline/io.hpp"

namespace segloc::pipeline {

namespace {

using nlohmann::json;

// Reads known keys of one object and rejects the rest.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  Section child(const char* key) {
    used_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, path_ + "." + key);
  }

  const json& raw(const char* key) {
    used_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k)) throw ConfigError("unknown config key " + path_ + "." + k);
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid config: " + what);
}

}  // namespace

void validate(const ScenarioConfig& c) {
  require(c.world.extent > 0, "world.extent must be positive");
  require(c.world.road_radius > c.world.road_half_width, "world.road_radius must exceed road_half_width");
  require(c.world.road_radius + c.world.road_half_width <= c.world.extent / 2, "road does not fit world.extent");
  require(c.sensor.range > 0 && c.sensor.beams >= 1 && c.sensor.horizontal_resolution_deg > 0, "sensor settings");
  require(c.sensor.noise >= 0, "sensor.noise must be >= 0");
  require(c.step_length > 0 && c.dt > 0, "step_length and dt must be positive");
  require(!c.robots.empty(), "at least one robot");
  for (const auto& r : c.robots) require(r.arc >= 0, "robot arc must be >= 0");
  require(c.odometry.translation >= 0 && c.odometry.rotation >= 0, "odometry noise must be >= 0");
  require(c.segmentation.voxel_side > 0 && c.segmentation.activation_threshold >= 1, "segmentation voxel settings");
  require(c.segmentation.segmenter.radius > 0 && c.segmentation.segmenter.growing_radius > 0, "segmenter radii");
  require(c.segmentation.segmenter.min_growth_ratio >= 1.0, "segmenter.min_growth_ratio must be >= 1");
  require(c.localization.neighbours >= 1, "localization.neighbours must be >= 1");
  require(c.localization.epsilon > 0, "localization.epsilon must be positive");
  require(c.localization.min_correspondences >= 3, "localization.min_correspondences must be >= 3");
  const auto& t = c.training;
  require(t.descriptor_dim >= 1 && t.epochs >= 0 && t.batch >= 1 && t.learning_rate > 0, "training settings");
  require(t.dropout >= 0 && t.dropout < 1, "training.dropout must be in [0, 1)");
  require(t.alpha >= 0 && t.gamma > 0 && t.gamma < 1, "training.alpha / gamma");
  require(t.val_fraction >= 0 && t.val_fraction < 1, "training.val_fraction must be in [0, 1)");
  architecture_of(t);
  if (c.descriptor.provider != descriptors::Provider::eigen)
    require(!c.descriptor.model_dir.empty(), "descriptor.model_dir is required for learned providers");
}

ScenarioConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ScenarioConfig c;
  Section root(j, "config");
  if (!root.has("seed")) throw ConfigError("config: \"seed\" is required");
  root.get("seed", c.seed);
  {
    auto w = root.child("world");
    w.get("extent", c.world.extent);
    w.get("object_count", c.world.object_count);
    w.get("road_radius", c.world.road_radius);
    w.get("road_half_width", c.world.road_half_width);
    w.get("max_offset", c.world.max_offset);
    w.get("min_gap", c.world.min_gap);
    w.finish();
  }
  {
    auto s = root.child("sensor");
    s.get("range", c.sensor.range);
    s.get("horizontal_resolution_deg", c.sensor.horizontal_resolution_deg);
    s.get("beams", c.sensor.beams);
    s.get("min_elevation_deg", c.sensor.min_elevation_deg);
    s.get("max_elevation_deg", c.sensor.max_elevation_deg);
    s.get("noise", c.sensor.noise);
    s.get("height", c.sensor_height);
    s.finish();
  }
  root.get("step_length", c.step_length);
  root.get("dt", c.dt);
  if (root.has("robots")) {
    const json& arr = root.raw("robots");
    if (!arr.is_array()) throw ConfigError("config.robots: expected an array");
    c.robots.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Section r(arr[i], "config.robots[" + std::to_string(i) + "]");
      RobotConfig rc;
      r.get("start_angle", rc.start_angle);
      r.get("arc", rc.arc);
      r.get("clockwise", rc.clockwise);
      r.get("transmit", rc.transmit);
      r.finish();
      c.robots.push_back(rc);
    }
  }
  {
    auto o = root.child("odometry");
    o.get("translation", c.odometry.translation);
    o.get("rotation", c.odometry.rotation);
    o.finish();
  }
  {
    auto s = root.child("segmentation");
    s.get("voxel_side", c.segmentation.voxel_side);
    s.get("activation_threshold", c.segmentation.activation_threshold);
    s.get("ground_threshold", c.segmentation.ground_threshold);
    s.get("radius", c.segmentation.segmenter.radius);
    s.get("growing_radius", c.segmentation.segmenter.growing_radius);
    s.get("min_points", c.segmentation.segmenter.min_points);
    s.get("min_growth_ratio", c.segmentation.segmenter.min_growth_ratio);
    s.finish();
  }
  {
    auto d = root.child("descriptor");
    std::string provider = descriptors::to_string(c.descriptor.provider);
    d.get("provider", provider);
    try {
      c.descriptor.provider = descriptors::provider_from_string(provider);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config.descriptor.provider: ") + e.what());
    }
    d.get("model_dir", c.descriptor.model_dir);
    d.finish();
  }
  {
    auto l = root.child("localization");
    l.get("neighbours", c.localization.neighbours);
    l.get("epsilon", c.localization.epsilon);
    l.get("min_correspondences", c.localization.min_correspondences);
    l.get("yaw_only", c.localization.yaw_only);
    l.get("every", c.localization.every);
    l.get("local_radius", c.localization.local_radius);
    l.get("self_exclusion", c.localization.self_exclusion);
    std::vector<std::string> exclude;
    l.get("exclude", exclude);
    for (const auto& name : exclude) {
      try {
        c.localization.exclude.insert(descriptors::semantic_from_string(name));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config.localization.exclude: ") + e.what());
      }
    }
    l.finish();
  }
  {
    auto t = root.child("training");
    auto& tc = c.training;
    t.get("architecture", tc.architecture);
    t.get("descriptor_dim", tc.descriptor_dim);
    t.get("dropout", tc.dropout);
    t.get("alpha", tc.alpha);
    t.get("gamma", tc.gamma);
    t.get("epochs", tc.epochs);
    t.get("batch", tc.batch);
    t.get("learning_rate", tc.learning_rate);
    t.get("observations_per_track", tc.observations_per_track);
    t.get("val_fraction", tc.val_fraction);
    t.get("worlds", tc.worlds);
    t.get("semantic_epochs", tc.semantic_epochs);
    t.finish();
  }
  root.get("threaded", c.threaded);
  root.get("keep_tracks", c.keep_tracks);
  root.finish();
  validate(c);
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  ScenarioConfig c = parse_config(ss.str());
  if (!c.descriptor.model_dir.empty()) {
    std::filesystem::path m(c.descriptor.model_dir);
    if (m.is_relative()) m = std::filesystem::path(path).parent_path() / m;
    if (!std::filesystem::exists(m / "model.json"))
      throw ConfigError("config.descriptor.model_dir: no model at " + m.string());
    c.descriptor.model_dir = m.string();
  }
  return c;
}

std::string dump_config(const ScenarioConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["world"] = {{"extent", c.world.extent},
                {"object_count", c.world.object_count},
                {"road_radius", c.world.road_radius},
                {"road_half_width", c.world.road_half_width},
                {"max_offset", c.world.max_offset},
                {"min_gap", c.world.min_gap}};
  j["sensor"] = {{"range", c.sensor.range},
                 {"horizontal_resolution_deg", c.sensor.horizontal_resolution_deg},
                 {"beams", c.sensor.beams},
                 {"min_elevation_deg", c.sensor.min_elevation_deg},
                 {"max_elevation_deg", c.sensor.max_elevation_deg},
                 {"noise", c.sensor.noise},
                 {"height", c.sensor_height}};
  j["step_length"] = c.step_length;
  j["dt"] = c.dt;
  j["robots"] = json::array();
  for (const auto& r : c.robots)
    j["robots"].push_back(
        {{"start_angle", r.start_angle}, {"arc", r.arc}, {"clockwise", r.clockwise}, {"transmit", r.transmit}});
  j["odometry"] = {{"translation", c.odometry.translation}, {"rotation", c.odometry.rotation}};
  const auto& s = c.segmentation;
  j["segmentation"] = {{"voxel_side", s.voxel_side},
                       {"activation_threshold", s.activation_threshold},
                       {"ground_threshold", s.ground_threshold},
                       {"radius", s.segmenter.radius},
                       {"growing_radius", s.segmenter.growing_radius},
                       {"min_points", s.segmenter.min_points},
                       {"min_growth_ratio", s.segmenter.min_growth_ratio}};
  j["descriptor"] = {{"provider", descriptors::to_string(c.descriptor.provider)}, {"model_dir", c.descriptor.model_dir}};
  std::vector<std::string> exclude;
  for (auto e : c.localization.exclude) exclude.push_back(descriptors::to_string(e));
  j["localization"] = {{"neighbours", c.localization.neighbours},
                       {"epsilon", c.localization.epsilon},
                       {"min_correspondences", c.localization.min_correspondences},
                       {"yaw_only", c.localization.yaw_only},
                       {"every", c.localization.every},
                       {"local_radius", c.localization.local_radius},
                       {"self_exclusion", c.localization.self_exclusion},
                       {"exclude", exclude}};
  const auto& t = c.training;
  j["training"] = {{"architecture", t.architecture},
                   {"descriptor_dim", t.descriptor_dim},
                   {"dropout", t.dropout},
                   {"alpha", t.alpha},
                   {"gamma", t.gamma},
                   {"epochs", t.epochs},
                   {"batch", t.batch},
                   {"learning_rate", t.learning_rate},
                   {"observations_per_track", t.observations_per_track},
                   {"val_fraction", t.val_fraction},
                   {"worlds", t.worlds},
                   {"semantic_epochs", t.semantic_epochs}};
  j["threaded"] = c.threaded;
  j["keep_tracks"] = c.keep_tracks;
  return j.dump(2);
}

descriptors::Architecture architecture_of(const TrainingConfig& t) {
  descriptors::Architecture a;
  if (t.architecture == "desk")
    a = descriptors::Architecture::desk(t.descriptor_dim);
  else if (t.architecture == "tiny")
    a = descriptors::Architecture::tiny(t.descriptor_dim);
  else if (t.architecture == "full")
    a.descriptor_dim = t.descriptor_dim;
  else
    throw ConfigError("invalid config: unknown training.architecture '" + t.architecture + "'");
  a.dropout = t.dropout;
  return a;
}

namespace {

const char* kind_name(ShapeKind k) {
  switch (k) {
    case ShapeKind::box: return "box";
    case ShapeKind::cylinder: return "cylinder";
    case ShapeKind::l_prism: return "l_prism";
    case ShapeKind::wall: return "wall";
  }
  return "box";
}

ShapeKind kind_from(const std::string& s) {
  for (auto k : {ShapeKind::box, ShapeKind::cylinder, ShapeKind::l_prism, ShapeKind::wall})
    if (s == kind_name(k)) return k;
  throw DataError("world: unknown shape '" + s + "'");
}

}  // namespace

std::string world_to_json(const SyntheticWorld& w) {
  json j;
  j["seed"] = w.seed;
  j["params"] = {{"extent", w.params.extent},         {"object_count", w.params.object_count},
                 {"road_radius", w.params.road_radius}, {"road_half_width", w.params.road_half_width},
                 {"max_offset", w.params.max_offset},   {"min_gap", w.params.min_gap}};
  j["objects"] = json::array();
  for (const auto& o : w.objects)
    j["objects"].push_back({{"id", o.id},
                            {"kind", kind_name(o.kind)},
                            {"template", o.template_index},
                            {"x", o.x},
                            {"y", o.y},
                            {"yaw", o.yaw},
                            {"size", {o.size.x(), o.size.y(), o.size.z()}},
                            {"thickness", o.thickness},
                            {"label", descriptors::to_string(o.label)}});
  return j.dump(1);
}

SyntheticWorld world_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    SyntheticWorld w;
    w.seed = j.at("seed").get<std::uint64_t>();
    const auto& p = j.at("params");
    w.params.extent = p.at("extent").get<double>();
    w.params.object_count = p.at("object_count").get<std::size_t>();
    w.params.road_radius = p.at("road_radius").get<double>();
    w.params.road_half_width = p.at("road_half_width").get<double>();
    w.params.max_offset = p.at("max_offset").get<double>();
    w.params.min_gap = p.at("min_gap").get<double>();
    for (const auto& o : j.at("objects")) {
      WorldObject ob;
      ob.id = o.at("id").get<std::uint32_t>();
      ob.kind = kind_from(o.at("kind").get<std::string>());
      ob.template_index = o.at("template").get<int>();
      ob.x = o.at("x").get<double>();
      ob.y = o.at("y").get<double>();
      ob.yaw = o.at("yaw").get<double>();
      const auto s = o.at("size").get<std::vector<double>>();
      if (s.size() != 3) throw DataError("world: object size needs 3 values");
      ob.size = Point3(s[0], s[1], s[2]);
      ob.thickness = o.at("thickness").get<double>();
      ob.label = descriptors::semantic_from_string(o.at("label").get<std::string>());
      w.objects.push_back(ob);
    }
    return w;
  } catch (const json::exception& e) {
    throw DataError(std::string("world file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("world file: ") + e.what());
  }
}

}  // namespace segloc::pipeline
