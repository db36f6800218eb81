// Copyright 2026 The msd Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MSD_JSON_IO_HPP
#define MSD_JSON_IO_HPP

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "msd/dropout.hpp"
#include "msd/fusionnet.hpp"
#include "msd/metrics.hpp"
#include "msd/raster.hpp"
#include "msd/training.hpp"
#include "msd/worldsim.hpp"

namespace msd::data {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kDatasetSchemaVersion = "worldsim/1";
constexpr const char* kCheckpointFormat = "msd-checkpoint/1";

// ---------------------------------------------------------------------------
// small file helpers

inline void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << content;
}

inline std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json read_json_file(const fs::path& path) {
  return json::parse(read_text_file(path));
}

// ---------------------------------------------------------------------------
// config serialization

inline json to_json(const sim::GenConfig& c) {
  json classes = json::array();
  for (const auto& cp : c.classes) {
    classes.push_back({{"length_min", cp.length_min},
                       {"length_max", cp.length_max},
                       {"speed_min", cp.speed_min},
                       {"speed_max", cp.speed_max},
                       {"turn_rate_max", cp.turn_rate_max},
                       {"reflectivity_mean", cp.reflectivity_mean},
                       {"rcs_mean", cp.rcs_mean},
                       {"appearance_base", cp.appearance_base}});
  }
  return {{"map_length", c.map_length},
          {"map_width", c.map_width},
          {"map_chamfer", c.map_chamfer},
          {"lane_count", c.lane_count},
          {"lane_spacing", c.lane_spacing},
          {"actor_count_min", c.actor_count_min},
          {"actor_count_max", c.actor_count_max},
          {"class_probs", c.class_probs},
          {"classes", classes},
          {"reflectivity_sigma", c.reflectivity_sigma},
          {"rcs_sigma", c.rcs_sigma},
          {"appearance_jitter", c.appearance_jitter},
          {"sdv_speed_min", c.sdv_speed_min},
          {"sdv_speed_max", c.sdv_speed_max},
          {"sdv_clearance", c.sdv_clearance},
          {"lidar_rays", c.lidar_rays},
          {"lidar_max_range", c.lidar_max_range},
          {"lidar_noise_sigma", c.lidar_noise_sigma},
          {"wall_reflectivity", c.wall_reflectivity},
          {"radar_returns_min", c.radar_returns_min},
          {"radar_returns_max", c.radar_returns_max},
          {"radar_pos_sigma", c.radar_pos_sigma},
          {"radar_vel_sigma", c.radar_vel_sigma},
          {"camera_fov_half", c.camera_fov_half},
          {"camera_resolution", c.camera_resolution},
          {"camera_noise_sigma", c.camera_noise_sigma},
          {"background_color", c.background_color},
          {"duration_s", c.duration_s},
          {"placement_retries", c.placement_retries}};
}

inline sim::GenConfig gen_config_from_json(const json& j) {
  sim::GenConfig c;
  c.map_length = j.value("map_length", c.map_length);
  c.map_width = j.value("map_width", c.map_width);
  c.map_chamfer = j.value("map_chamfer", c.map_chamfer);
  c.lane_count = j.value("lane_count", c.lane_count);
  c.lane_spacing = j.value("lane_spacing", c.lane_spacing);
  c.actor_count_min = j.value("actor_count_min", c.actor_count_min);
  c.actor_count_max = j.value("actor_count_max", c.actor_count_max);
  if (j.contains("class_probs")) {
    for (int i = 0; i < 3; ++i) c.class_probs[static_cast<size_t>(i)] = j["class_probs"][static_cast<size_t>(i)];
  }
  if (j.contains("classes")) {
    for (int i = 0; i < 3; ++i) {
      const json& cj = j["classes"][static_cast<size_t>(i)];
      auto& cp = c.classes[static_cast<size_t>(i)];
      cp.length_min = cj.value("length_min", cp.length_min);
      cp.length_max = cj.value("length_max", cp.length_max);
      cp.speed_min = cj.value("speed_min", cp.speed_min);
      cp.speed_max = cj.value("speed_max", cp.speed_max);
      cp.turn_rate_max = cj.value("turn_rate_max", cp.turn_rate_max);
      cp.reflectivity_mean = cj.value("reflectivity_mean", cp.reflectivity_mean);
      cp.rcs_mean = cj.value("rcs_mean", cp.rcs_mean);
      if (cj.contains("appearance_base")) {
        for (int k = 0; k < 3; ++k) cp.appearance_base[static_cast<size_t>(k)] = cj["appearance_base"][static_cast<size_t>(k)];
      }
    }
  }
  c.reflectivity_sigma = j.value("reflectivity_sigma", c.reflectivity_sigma);
  c.rcs_sigma = j.value("rcs_sigma", c.rcs_sigma);
  c.appearance_jitter = j.value("appearance_jitter", c.appearance_jitter);
  c.sdv_speed_min = j.value("sdv_speed_min", c.sdv_speed_min);
  c.sdv_speed_max = j.value("sdv_speed_max", c.sdv_speed_max);
  c.sdv_clearance = j.value("sdv_clearance", c.sdv_clearance);
  c.lidar_rays = j.value("lidar_rays", c.lidar_rays);
  c.lidar_max_range = j.value("lidar_max_range", c.lidar_max_range);
  c.lidar_noise_sigma = j.value("lidar_noise_sigma", c.lidar_noise_sigma);
  c.wall_reflectivity = j.value("wall_reflectivity", c.wall_reflectivity);
  c.radar_returns_min = j.value("radar_returns_min", c.radar_returns_min);
  c.radar_returns_max = j.value("radar_returns_max", c.radar_returns_max);
  c.radar_pos_sigma = j.value("radar_pos_sigma", c.radar_pos_sigma);
  c.radar_vel_sigma = j.value("radar_vel_sigma", c.radar_vel_sigma);
  c.camera_fov_half = j.value("camera_fov_half", c.camera_fov_half);
  c.camera_resolution = j.value("camera_resolution", c.camera_resolution);
  c.camera_noise_sigma = j.value("camera_noise_sigma", c.camera_noise_sigma);
  if (j.contains("background_color")) {
    for (int k = 0; k < 3; ++k) c.background_color[static_cast<size_t>(k)] = j["background_color"][static_cast<size_t>(k)];
  }
  c.duration_s = j.value("duration_s", c.duration_s);
  c.placement_retries = j.value("placement_retries", c.placement_retries);
  return c;
}

inline json to_json(const raster::GridSpec& g) {
  return {{"length_m", g.length_m}, {"width_m", g.width_m}, {"cell_m", g.cell_m}};
}
inline raster::GridSpec grid_spec_from_json(const json& j) {
  raster::GridSpec g;
  g.length_m = j.value("length_m", g.length_m);
  g.width_m = j.value("width_m", g.width_m);
  g.cell_m = j.value("cell_m", g.cell_m);
  return g;
}

inline json to_json(const raster::RvSpec& r) { return {{"azimuth_bins", r.azimuth_bins}}; }
inline raster::RvSpec rv_spec_from_json(const json& j) {
  raster::RvSpec r;
  r.azimuth_bins = j.value("azimuth_bins", r.azimuth_bins);
  return r;
}

inline json to_json(const net::ArchConfig& a) {
  return {{"rv_width", a.rv_width},
          {"radar_width", a.radar_width},
          {"bev_width", a.bev_width},
          {"heads_only", a.heads_only},
          {"projection_margin_m", a.projection_margin_m}};
}
inline net::ArchConfig arch_config_from_json(const json& j) {
  net::ArchConfig a;
  a.rv_width = j.value("rv_width", a.rv_width);
  a.radar_width = j.value("radar_width", a.radar_width);
  a.bev_width = j.value("bev_width", a.bev_width);
  a.heads_only = j.value("heads_only", a.heads_only);
  a.projection_margin_m = j.value("projection_margin_m", a.projection_margin_m);
  return a;
}

inline json to_json(const net::TrainConfig& t) {
  return {{"steps", t.steps},
          {"batch_size", t.batch_size},
          {"lr", t.lr},
          {"lr_min_scale", t.lr_min_scale},
          {"val_every", t.val_every},
          {"snapshot_every", t.snapshot_every},
          {"seed", t.seed},
          {"deterministic", t.deterministic}};
}
inline net::TrainConfig train_config_from_json(const json& j) {
  net::TrainConfig t;
  t.steps = j.value("steps", t.steps);
  t.batch_size = j.value("batch_size", t.batch_size);
  t.lr = j.value("lr", t.lr);
  t.lr_min_scale = j.value("lr_min_scale", t.lr_min_scale);
  t.val_every = j.value("val_every", t.val_every);
  t.snapshot_every = j.value("snapshot_every", t.snapshot_every);
  t.seed = j.value("seed", t.seed);
  t.deterministic = j.value("deterministic", t.deterministic);
  return t;
}

inline json to_json(const net::LossConfig& l) {
  return {{"w_cls", l.w_cls},         {"w_box", l.w_box},
          {"w_traj", l.w_traj},       {"focal_gamma", l.focal_gamma},
          {"focal_alpha", l.focal_alpha}, {"smooth_l1_beta", l.smooth_l1_beta}};
}
inline net::LossConfig loss_config_from_json(const json& j) {
  net::LossConfig l;
  l.w_cls = j.value("w_cls", l.w_cls);
  l.w_box = j.value("w_box", l.w_box);
  l.w_traj = j.value("w_traj", l.w_traj);
  l.focal_gamma = j.value("focal_gamma", l.focal_gamma);
  l.focal_alpha = j.value("focal_alpha", l.focal_alpha);
  l.smooth_l1_beta = j.value("smooth_l1_beta", l.smooth_l1_beta);
  return l;
}

inline json to_json(const drop::DropoutConfig& d) {
  json j = {{"p_camera", d.p_camera},
            {"p_radar", d.p_radar},
            {"p_intensity", d.p_intensity},
            {"camera_kind", d.camera_kind == drop::CameraDropKind::kFeature ? "feature"
                                                                            : "input"}};
  if (d.sentinel) j["sentinel"] = *d.sentinel;
  return j;
}
inline drop::DropoutConfig dropout_config_from_json(const json& j) {
  drop::DropoutConfig d;
  d.p_camera = j.value("p_camera", d.p_camera);
  d.p_radar = j.value("p_radar", d.p_radar);
  d.p_intensity = j.value("p_intensity", d.p_intensity);
  const std::string kind = j.value("camera_kind", "feature");
  d.camera_kind =
      kind == "input" ? drop::CameraDropKind::kInput : drop::CameraDropKind::kFeature;
  if (j.contains("sentinel")) d.sentinel = j["sentinel"].get<double>();
  return d;
}

inline json to_json(const drop::ModalityMask& m) {
  return {{"drop_camera", m.drop_camera},
          {"drop_radar", m.drop_radar},
          {"drop_intensity", m.drop_intensity}};
}
inline drop::ModalityMask mask_from_json(const json& j) {
  drop::ModalityMask m;
  m.drop_camera = j.value("drop_camera", false);
  m.drop_radar = j.value("drop_radar", false);
  m.drop_intensity = j.value("drop_intensity", false);
  return m;
}

inline json to_json(const metrics::MetricConfig& m) {
  return {{"iou_thresholds", m.iou_thresholds},
          {"de_horizon_s", m.de_horizon_s},
          {"de_recall", m.de_recall},
          {"fov_min", m.fov_min},
          {"fov_max", m.fov_max},
          {"score_threshold", m.score_threshold},
          {"nms_iou", m.nms_iou}};
}
inline metrics::MetricConfig metric_config_from_json(const json& j) {
  metrics::MetricConfig m;
  if (j.contains("iou_thresholds")) {
    for (int i = 0; i < 3; ++i) m.iou_thresholds[static_cast<size_t>(i)] = j["iou_thresholds"][static_cast<size_t>(i)];
  }
  m.de_horizon_s = j.value("de_horizon_s", m.de_horizon_s);
  m.de_recall = j.value("de_recall", m.de_recall);
  m.fov_min = j.value("fov_min", m.fov_min);
  m.fov_max = j.value("fov_max", m.fov_max);
  m.score_threshold = j.value("score_threshold", m.score_threshold);
  m.nms_iou = j.value("nms_iou", m.nms_iou);
  return m;
}

// ---------------------------------------------------------------------------
// world/frame serialization

inline json to_json(const sim::Actor& a) {
  return {{"id", a.id},
          {"cls", static_cast<int>(a.cls)},
          {"pose", {a.pose.x, a.pose.y, a.pose.heading}},
          {"length", a.length},
          {"width", a.width},
          {"velocity", {a.velocity.x, a.velocity.y}},
          {"turn_rate", a.turn_rate},
          {"reflectivity", a.reflectivity},
          {"appearance", a.appearance}};
}

inline sim::Actor actor_from_json(const json& j) {
  sim::Actor a;
  a.id = j["id"];
  a.cls = static_cast<sim::ActorClass>(j["cls"].get<int>());
  a.pose = {j["pose"][0], j["pose"][1], j["pose"][2]};
  a.length = j["length"];
  a.width = j["width"];
  a.velocity = {j["velocity"][0], j["velocity"][1]};
  a.turn_rate = j["turn_rate"];
  a.reflectivity = j["reflectivity"];
  for (int k = 0; k < 3; ++k) a.appearance[static_cast<size_t>(k)] = j["appearance"][static_cast<size_t>(k)];
  return a;
}

inline json to_json(const sim::MapGeometry& m) {
  json drivable = json::array();
  for (const auto& v : m.drivable_area) {
    drivable.push_back(v.x);
    drivable.push_back(v.y);
  }
  json lanes = json::array();
  for (const auto& lane : m.lane_centerlines) {
    json l = json::array();
    for (const auto& v : lane) {
      l.push_back(v.x);
      l.push_back(v.y);
    }
    lanes.push_back(l);
  }
  return {{"drivable", drivable}, {"lanes", lanes}};
}

inline sim::MapGeometry map_from_json(const json& j) {
  sim::MapGeometry m;
  const auto& d = j["drivable"];
  for (size_t i = 0; i + 1 < d.size(); i += 2) {
    m.drivable_area.push_back({d[i], d[i + 1]});
  }
  for (const auto& lj : j["lanes"]) {
    std::vector<geom::Vec2> lane;
    for (size_t i = 0; i + 1 < lj.size(); i += 2) lane.push_back({lj[i], lj[i + 1]});
    m.lane_centerlines.push_back(std::move(lane));
  }
  return m;
}

inline json to_json(const sim::LidarSweep& s) {
  json x = json::array(), y = json::array(), inten = json::array(), hit = json::array();
  for (size_t i = 0; i < s.points.size(); ++i) {
    x.push_back(s.points[i].x);
    y.push_back(s.points[i].y);
    inten.push_back(s.points[i].intensity);
    hit.push_back(i < s.hit_actor_ids.size() ? s.hit_actor_ids[i] : -1);
  }
  return {{"t", s.timestamp_s}, {"bins", s.azimuth_bin_count}, {"x", x}, {"y", y},
          {"intensity", inten}, {"hit", hit}};
}

inline sim::LidarSweep lidar_sweep_from_json(const json& j) {
  sim::LidarSweep s;
  s.timestamp_s = j["t"];
  s.azimuth_bin_count = j["bins"];
  const auto& x = j["x"];
  const auto& y = j["y"];
  const auto& inten = j["intensity"];
  const auto& hit = j["hit"];
  for (size_t i = 0; i < x.size(); ++i) {
    s.points.push_back({x[i], y[i], inten[i]});
    s.hit_actor_ids.push_back(hit[i]);
  }
  return s;
}

inline json to_json(const sim::RadarSweep& s) {
  json x = json::array(), y = json::array(), rv = json::array(), amp = json::array(),
       ids = json::array();
  for (size_t i = 0; i < s.returns.size(); ++i) {
    const auto& r = s.returns[i];
    x.push_back(r.x);
    y.push_back(r.y);
    rv.push_back(r.radial_velocity);
    amp.push_back(r.amplitude);
    ids.push_back(i < s.actor_ids.size() ? s.actor_ids[i] : -1);
  }
  return {{"t", s.timestamp_s}, {"x", x}, {"y", y}, {"rv", rv}, {"amp", amp},
          {"actor", ids}};
}

inline sim::RadarSweep radar_sweep_from_json(const json& j) {
  sim::RadarSweep s;
  s.timestamp_s = j["t"];
  const auto& x = j["x"];
  for (size_t i = 0; i < x.size(); ++i) {
    s.returns.push_back({x[i], j["y"][i], j["rv"][i], j["amp"][i]});
    s.actor_ids.push_back(j["actor"][i]);
  }
  return s;
}

inline json to_json(const sim::CameraImage& c) {
  json px = json::array();
  for (const auto& p : c.pixels) {
    px.push_back(p[0]);
    px.push_back(p[1]);
    px.push_back(p[2]);
  }
  return {{"t", c.timestamp_s}, {"fov", {c.fov_min, c.fov_max}}, {"pixels", px}};
}

inline sim::CameraImage camera_from_json(const json& j) {
  sim::CameraImage c;
  c.timestamp_s = j["t"];
  c.fov_min = j["fov"][0];
  c.fov_max = j["fov"][1];
  const auto& px = j["pixels"];
  for (size_t i = 0; i + 2 < px.size(); i += 3) {
    c.pixels.push_back({px[i], px[i + 1], px[i + 2]});
  }
  return c;
}

inline json to_json(const sim::GroundTruthLabel& l) {
  json fut = json::array();
  for (const auto& w : l.future) {
    fut.push_back(w.x);
    fut.push_back(w.y);
  }
  return {{"actor_id", l.actor_id},
          {"cls", static_cast<int>(l.cls)},
          {"box", {l.box.center.x, l.box.center.y, l.box.heading, l.box.length, l.box.width}},
          {"future", fut},
          {"in_fov", l.in_fov},
          {"lidar_hits", l.num_lidar_hits}};
}

inline sim::GroundTruthLabel label_from_json(const json& j) {
  sim::GroundTruthLabel l;
  l.actor_id = j["actor_id"];
  l.cls = static_cast<sim::ActorClass>(j["cls"].get<int>());
  l.box = {{j["box"][0], j["box"][1]}, j["box"][2], j["box"][3], j["box"][4]};
  const auto& fut = j["future"];
  for (int k = 0; k < sim::kFutureSteps; ++k) {
    l.future[static_cast<size_t>(k)] = {fut[static_cast<size_t>(2 * k)],
                                        fut[static_cast<size_t>(2 * k + 1)]};
  }
  l.in_fov = j["in_fov"];
  l.num_lidar_hits = j["lidar_hits"];
  return l;
}

inline json to_json(const sim::SensorFrame& f) {
  json lidar = json::array(), radar = json::array(), labels = json::array();
  for (const auto& s : f.lidar_sweeps) lidar.push_back(to_json(s));
  for (const auto& s : f.radar_sweeps) radar.push_back(to_json(s));
  for (const auto& l : f.labels) labels.push_back(to_json(l));
  return {{"t", f.timestamp_s},       {"scene_seed", f.scene_seed},
          {"lidar", lidar},           {"radar", radar},
          {"camera", to_json(f.camera)}, {"labels", labels},
          {"map", to_json(f.map)}};
}

inline sim::SensorFrame frame_from_json(const json& j) {
  sim::SensorFrame f;
  f.timestamp_s = j["t"];
  f.scene_seed = j["scene_seed"];
  for (const auto& s : j["lidar"]) f.lidar_sweeps.push_back(lidar_sweep_from_json(s));
  for (const auto& s : j["radar"]) f.radar_sweeps.push_back(radar_sweep_from_json(s));
  f.camera = camera_from_json(j["camera"]);
  for (const auto& l : j["labels"]) f.labels.push_back(label_from_json(l));
  f.map = map_from_json(j["map"]);
  return f;
}

inline json to_json(const sim::Scene& s) {
  json actors = json::array();
  for (const auto& a : s.actors) actors.push_back(to_json(a));
  return {{"seed", s.seed},
          {"sdv_pose", {s.sdv_pose.x, s.sdv_pose.y, s.sdv_pose.heading}},
          {"sdv_velocity", {s.sdv_velocity.x, s.sdv_velocity.y}},
          {"sdv_turn_rate", s.sdv_turn_rate},
          {"actors", actors},
          {"map", to_json(s.map)},
          {"duration_s", s.duration_s},
          {"sample_rate_hz", s.sample_rate_hz}};
}

inline sim::Scene scene_from_json(const json& j) {
  sim::Scene s;
  s.seed = j["seed"];
  s.sdv_pose = {j["sdv_pose"][0], j["sdv_pose"][1], j["sdv_pose"][2]};
  s.sdv_velocity = {j["sdv_velocity"][0], j["sdv_velocity"][1]};
  s.sdv_turn_rate = j["sdv_turn_rate"];
  for (const auto& a : j["actors"]) s.actors.push_back(actor_from_json(a));
  s.map = map_from_json(j["map"]);
  s.duration_s = j["duration_s"];
  s.sample_rate_hz = j["sample_rate_hz"];
  return s;
}

// ---------------------------------------------------------------------------
// dataset shards

struct DatasetManifest {
  std::string version = kDatasetSchemaVersion;
  int scene_count = 0;
  int train_scene_count = 0;
  int frame_count = 0;
  std::map<std::string, int> class_histogram;
  sim::GenConfig generator;
  std::vector<double> frame_times;
  std::vector<std::string> shards;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<sim::SensorFrame> frames;     // flattened, scene-major
  std::vector<int> frame_scene_index;       // scene index per frame
};

inline json to_json(const DatasetManifest& m) {
  return {{"version", m.version},
          {"scene_count", m.scene_count},
          {"train_scene_count", m.train_scene_count},
          {"frame_count", m.frame_count},
          {"class_histogram", m.class_histogram},
          {"generator", to_json(m.generator)},
          {"frame_times", m.frame_times},
          {"shards", m.shards}};
}

inline DatasetManifest dataset_manifest_from_json(const json& j) {
  DatasetManifest m;
  m.version = j["version"];
  if (m.version != kDatasetSchemaVersion) {
    throw std::runtime_error("unsupported dataset schema version: " + m.version);
  }
  m.scene_count = j["scene_count"];
  m.train_scene_count = j["train_scene_count"];
  m.frame_count = j["frame_count"];
  m.class_histogram = j["class_histogram"].get<std::map<std::string, int>>();
  m.generator = gen_config_from_json(j["generator"]);
  m.frame_times = j["frame_times"].get<std::vector<double>>();
  m.shards = j["shards"].get<std::vector<std::string>>();
  return m;
}

inline Dataset load_dataset(const fs::path& dir) {
  Dataset ds;
  ds.manifest = dataset_manifest_from_json(read_json_file(dir / "manifest.json"));
  int scene_index = 0;
  for (const auto& shard : ds.manifest.shards) {
    const json j = read_json_file(dir / shard);
    if (j.at("version").get<std::string>() != kDatasetSchemaVersion) {
      throw std::runtime_error("shard schema mismatch in " + shard);
    }
    for (const auto& sj : j.at("scenes")) {
      for (const auto& fj : sj.at("frames")) {
        ds.frames.push_back(frame_from_json(fj));
        ds.frame_scene_index.push_back(scene_index);
      }
      ++scene_index;
    }
  }
  if (scene_index != ds.manifest.scene_count) {
    throw std::runtime_error("dataset scene count mismatch");
  }
  return ds;
}

inline std::optional<double> load_sentinel(const fs::path& data_dir) {
  const fs::path p = data_dir / "sentinel.json";
  if (!fs::exists(p)) return std::nullopt;
  const json j = read_json_file(p);
  return j.at("sentinel").get<double>();
}

inline void write_sentinel(const fs::path& data_dir, double sentinel, long long points) {
  const json j = {{"sentinel", sentinel}, {"point_count", points}};
  write_text_file(data_dir / "sentinel.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// checkpoints

struct CheckpointMeta {
  net::ArchConfig arch;
  raster::GridSpec grid;
  raster::RvSpec rv;
  drop::DropoutConfig dropout;
  drop::ModalityMask forced_mask;
  std::string train_mode = "baseline";
  uint64_t seed = 0;
  int steps = 0;
  net::LossConfig loss;
};

inline void save_checkpoint(const fs::path& dir, const net::Model& model,
                            const CheckpointMeta& meta) {
  fs::create_directories(dir);
  json params = json::array();
  size_t offset = 0;
  std::vector<float> blob;
  for (const auto& p : model.params().items()) {
    params.push_back({{"name", p.name},
                      {"shape", p.shape},
                      {"offset_bytes", offset},
                      {"count", p.size()}});
    for (double v : p.value) blob.push_back(static_cast<float>(v));
    offset += p.size() * sizeof(float);
  }
  const json manifest = {{"format", kCheckpointFormat},
                         {"dtype", "f32"},
                         {"arch", to_json(meta.arch)},
                         {"grid", to_json(meta.grid)},
                         {"rv", to_json(meta.rv)},
                         {"dropout", to_json(meta.dropout)},
                         {"forced_mask", to_json(meta.forced_mask)},
                         {"train_mode", meta.train_mode},
                         {"seed", meta.seed},
                         {"steps", meta.steps},
                         {"loss", to_json(meta.loss)},
                         {"params", params}};
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");

  std::ofstream bin(dir / "params.bin", std::ios::binary);
  if (!bin) throw std::runtime_error("cannot write params.bin in " + dir.string());
  // little-endian f32, matching the manifest's declared dtype
  bin.write(reinterpret_cast<const char*>(blob.data()),
            static_cast<std::streamsize>(blob.size() * sizeof(float)));
}

struct LoadedCheckpoint {
  CheckpointMeta meta;
  net::Model model;
};

inline LoadedCheckpoint load_checkpoint(const fs::path& dir) {
  const json manifest = read_json_file(dir / "manifest.json");
  if (manifest.at("format").get<std::string>() != kCheckpointFormat) {
    throw std::runtime_error("unsupported checkpoint format");
  }
  CheckpointMeta meta;
  meta.arch = arch_config_from_json(manifest.at("arch"));
  meta.grid = grid_spec_from_json(manifest.at("grid"));
  meta.rv = rv_spec_from_json(manifest.at("rv"));
  meta.dropout = dropout_config_from_json(manifest.at("dropout"));
  meta.forced_mask = mask_from_json(manifest.at("forced_mask"));
  meta.train_mode = manifest.at("train_mode");
  meta.seed = manifest.at("seed");
  meta.steps = manifest.at("steps");
  meta.loss = loss_config_from_json(manifest.at("loss"));

  LoadedCheckpoint out{meta, net::Model(meta.arch, meta.grid, meta.rv)};

  std::ifstream bin(dir / "params.bin", std::ios::binary);
  if (!bin) throw std::runtime_error("cannot read params.bin in " + dir.string());
  for (const auto& pj : manifest.at("params")) {
    nn::Param& p = out.model.params().get(pj.at("name").get<std::string>());
    const size_t count = pj.at("count").get<size_t>();
    if (count != p.size()) throw std::runtime_error("checkpoint shape mismatch: " + p.name);
    std::vector<float> tmp(count);
    bin.seekg(static_cast<std::streamoff>(pj.at("offset_bytes").get<size_t>()));
    bin.read(reinterpret_cast<char*>(tmp.data()),
             static_cast<std::streamsize>(count * sizeof(float)));
    if (!bin) throw std::runtime_error("checkpoint truncated at " + p.name);
    for (size_t i = 0; i < count; ++i) p.value[i] = static_cast<double>(tmp[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// metrics reports

inline json to_json(const metrics::MetricsReport& r) {
  json classes = json::array();
  for (int k = 0; k < sim::kNumClasses; ++k) {
    const auto& cr = r.per_class[static_cast<size_t>(k)];
    json cj = {{"class", sim::class_name(static_cast<sim::ActorClass>(k))},
               {"labels", cr.labels},
               {"labels_fov", cr.labels_fov},
               {"detections", cr.detections},
               {"de_threshold", cr.de_threshold},
               {"de_recall_reached", cr.de_recall_reached}};
    if (cr.ap_full) cj["ap_full"] = *cr.ap_full;
    if (cr.ap_fov) cj["ap_fov"] = *cr.ap_fov;
    if (cr.de_cm) cj["de_cm"] = *cr.de_cm;
    classes.push_back(cj);
  }
  return {{"eval_mode", drop::to_string(r.mode)},
          {"per_class", classes},
          {"frames", r.frames},
          {"detections", r.detections},
          {"labels", r.labels},
          {"interpolation", r.interpolation}};
}

inline metrics::MetricsReport metrics_report_from_json(const json& j) {
  metrics::MetricsReport r;
  r.mode = drop::eval_mode_from_string(j.at("eval_mode"));
  r.frames = j.at("frames");
  r.detections = j.at("detections");
  r.labels = j.at("labels");
  r.interpolation = j.at("interpolation");
  const auto& classes = j.at("per_class");
  for (int k = 0; k < sim::kNumClasses; ++k) {
    auto& cr = r.per_class[static_cast<size_t>(k)];
    const auto& cj = classes[static_cast<size_t>(k)];
    cr.labels = cj.at("labels");
    cr.labels_fov = cj.at("labels_fov");
    cr.detections = cj.at("detections");
    cr.de_threshold = cj.at("de_threshold");
    cr.de_recall_reached = cj.at("de_recall_reached");
    if (cj.contains("ap_full")) cr.ap_full = cj["ap_full"].get<double>();
    if (cj.contains("ap_fov")) cr.ap_fov = cj["ap_fov"].get<double>();
    if (cj.contains("de_cm")) cr.de_cm = cj["de_cm"].get<double>();
  }
  return r;
}

inline json to_json(const net::TrainLog& log) {
  json curve = json::array();
  for (const auto& e : log.loss_curve) {
    curve.push_back({{"step", e.step},
                     {"total", e.total},
                     {"cls", e.cls},
                     {"box", e.box},
                     {"traj", e.traj},
                     {"lr", e.lr}});
  }
  json vals = json::array();
  for (const auto& [step, v] : log.val_losses) vals.push_back({{"step", step}, {"loss", v}});
  return {{"loss_curve", curve},
          {"val_losses", vals},
          {"mask_camera", log.mask_camera},
          {"mask_radar", log.mask_radar},
          {"mask_intensity", log.mask_intensity},
          {"examples", log.examples},
          {"camera_pixels_read", log.camera_pixels_read},
          {"diverged", log.diverged},
          {"completed_steps", log.completed_steps},
          {"initial_loss", log.initial_loss},
          {"final_loss", log.final_loss}};
}

}  // namespace msd::data

#endif  // MSD_JSON_IO_HPP
