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

#ifndef MSD_HARNESS_HPP
#define MSD_HARNESS_HPP

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "msd/evaluate.hpp"
#include "msd/json_io.hpp"
#include "msd/plot.hpp"
#include "msd/training.hpp"

namespace msd::harness {

namespace fs = std::filesystem;
using data::json;

constexpr const char* kConfigSchemaVersion = "msd/1";

// ---------------------------------------------------------------------------
// experiment configuration

struct ExperimentConfig {
  std::string version = kConfigSchemaVersion;
  sim::GenConfig generator;
  raster::GridSpec grid;
  raster::RvSpec rv;
  net::ArchConfig model;
  net::TrainConfig train;
  net::LossConfig loss;
  drop::DropoutConfig dropout;
  metrics::MetricConfig metric;
  std::vector<uint64_t> seeds{1, 2, 3};
  int scenes = 400;
  int train_scenes = 300;
  std::vector<double> frame_times{0.9};
  std::string out_dir = "out";

  void validate() const {
    if (version != kConfigSchemaVersion) {
      throw std::invalid_argument("unsupported config version: " + version);
    }
    if (train_scenes <= 0 || train_scenes >= scenes) {
      throw std::invalid_argument("config: need 0 < train_scenes < scenes");
    }
    if (seeds.empty()) throw std::invalid_argument("config: at least one seed");
    if (frame_times.empty()) throw std::invalid_argument("config: need frame_times");
    for (const double t : frame_times) {
      if (t < 0.9 || t + 3.0 > generator.duration_s + 1e-9) {
        throw std::invalid_argument("config: frame time violates history/horizon bounds");
      }
    }
    grid.validate();
    dropout.validate();
    // the camera FOV drives both the renderer and the FOV metrics
    if (std::abs(metric.fov_max - generator.camera_fov_half) > 1e-9 ||
        std::abs(metric.fov_min + generator.camera_fov_half) > 1e-9) {
      throw std::invalid_argument("config: metric fov must match the camera fov");
    }
  }
};

inline json to_json(const ExperimentConfig& c) {
  return {{"version", c.version},
          {"generator", data::to_json(c.generator)},
          {"grid", data::to_json(c.grid)},
          {"rv", data::to_json(c.rv)},
          {"model", data::to_json(c.model)},
          {"train", data::to_json(c.train)},
          {"loss", data::to_json(c.loss)},
          {"dropout", data::to_json(c.dropout)},
          {"metric", data::to_json(c.metric)},
          {"seeds", c.seeds},
          {"scenes", c.scenes},
          {"train_scenes", c.train_scenes},
          {"frame_times", c.frame_times},
          {"out_dir", c.out_dir}};
}

inline ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig c;
  c.version = j.value("version", std::string(kConfigSchemaVersion));
  if (j.contains("generator")) c.generator = data::gen_config_from_json(j["generator"]);
  if (j.contains("grid")) c.grid = data::grid_spec_from_json(j["grid"]);
  if (j.contains("rv")) c.rv = data::rv_spec_from_json(j["rv"]);
  if (j.contains("model")) c.model = data::arch_config_from_json(j["model"]);
  if (j.contains("train")) c.train = data::train_config_from_json(j["train"]);
  if (j.contains("loss")) c.loss = data::loss_config_from_json(j["loss"]);
  if (j.contains("dropout")) c.dropout = data::dropout_config_from_json(j["dropout"]);
  if (j.contains("metric")) c.metric = data::metric_config_from_json(j["metric"]);
  if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<uint64_t>>();
  c.scenes = j.value("scenes", c.scenes);
  c.train_scenes = j.value("train_scenes", c.train_scenes);
  if (j.contains("frame_times")) c.frame_times = j["frame_times"].get<std::vector<double>>();
  c.out_dir = j.value("out_dir", c.out_dir);
  c.validate();
  return c;
}

/// Defaults mirror the full-scale setup (150x100 m grid at 1 m cells, 720
/// rays, +/-45 deg camera). Too slow to train on a laptop CPU in minutes;
/// see desk_config() for the reduced setup the experiment recipes use.
inline ExperimentConfig default_config() {
  ExperimentConfig c;
  c.metric.fov_min = -c.generator.camera_fov_half;
  c.metric.fov_max = c.generator.camera_fov_half;
  return c;
}

/// Reduced desk-scale setup: a 48x32 m grid, 240 LiDAR rays, a wide front
/// camera, and small branch widths. Every mechanism of the full pipeline is
/// retained; only resolutions shrink.
inline ExperimentConfig desk_config() {
  ExperimentConfig c;
  c.generator.map_length = 44.0;
  c.generator.map_width = 28.0;
  c.generator.map_chamfer = 4.0;
  c.generator.lane_count = 3;
  c.generator.actor_count_min = 4;
  c.generator.actor_count_max = 8;
  c.generator.classes[0].speed_max = 7.0;
  c.generator.classes[2].speed_max = 4.5;
  c.generator.lidar_rays = 240;
  c.generator.lidar_max_range = 60.0;
  c.generator.camera_fov_half = 1.75;  // wide-angle front camera
  c.generator.camera_resolution = 160;
  c.generator.radar_returns_max = 6;
  c.generator.sdv_speed_max = 4.0;
  c.grid = raster::GridSpec{48.0, 32.0, 1.0};
  c.rv = raster::RvSpec{96};
  c.model.rv_width = 8;
  c.model.radar_width = 8;
  c.model.bev_width = 16;
  c.train.steps = 1500;
  c.train.batch_size = 4;
  c.metric.fov_min = -c.generator.camera_fov_half;
  c.metric.fov_max = c.generator.camera_fov_half;
  c.scenes = 400;
  c.train_scenes = 300;
  c.generator.duration_s = 6.0;
  c.frame_times = {0.9, 1.9, 2.9};
  return c;
}

inline std::string config_hash_hex(const ExperimentConfig& cfg) {
  const std::string dump = to_json(cfg).dump();
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(dump.data(), dump.size())));
  return buf;
}

// ---------------------------------------------------------------------------
// training modes (Table-1 method rows)

enum class TrainMode { kBaseline, kNoCamera, kNoRadar, kNoIntensity, kDropout };

inline const char* to_string(TrainMode m) {
  switch (m) {
    case TrainMode::kBaseline: return "baseline";
    case TrainMode::kNoCamera: return "no-camera";
    case TrainMode::kNoRadar: return "no-radar";
    case TrainMode::kNoIntensity: return "no-intensity";
    case TrainMode::kDropout: return "dropout";
  }
  return "?";
}

inline TrainMode train_mode_from_string(const std::string& s) {
  if (s == "baseline") return TrainMode::kBaseline;
  if (s == "no-camera") return TrainMode::kNoCamera;
  if (s == "no-radar") return TrainMode::kNoRadar;
  if (s == "no-intensity") return TrainMode::kNoIntensity;
  if (s == "dropout") return TrainMode::kDropout;
  throw std::invalid_argument("unknown train mode: " + s);
}

inline const char* mode_display_name(TrainMode m) {
  switch (m) {
    case TrainMode::kBaseline: return "Baseline";
    case TrainMode::kNoCamera: return "No camera";
    case TrainMode::kNoRadar: return "No radar";
    case TrainMode::kNoIntensity: return "No intensity";
    case TrainMode::kDropout: return "Sensor Dropout";
  }
  return "?";
}

/// Ablation rows reuse the dropout masking path with the probability forced
/// to 1 and the mask forced through evaluation, so the ablation and dropout
/// code paths cannot diverge.
inline drop::DropoutConfig dropout_for_mode(const ExperimentConfig& cfg, TrainMode mode) {
  drop::DropoutConfig d = cfg.dropout;
  switch (mode) {
    case TrainMode::kBaseline:
      d.p_camera = d.p_radar = d.p_intensity = 0.0;
      break;
    case TrainMode::kNoCamera:
      d.p_camera = 1.0;
      d.p_radar = d.p_intensity = 0.0;
      break;
    case TrainMode::kNoRadar:
      d.p_radar = 1.0;
      d.p_camera = d.p_intensity = 0.0;
      break;
    case TrainMode::kNoIntensity:
      d.p_intensity = 1.0;
      d.p_camera = d.p_radar = 0.0;
      break;
    case TrainMode::kDropout:
      break;  // configured probabilities
  }
  return d;
}

inline drop::ModalityMask forced_mask_for_mode(TrainMode mode) {
  switch (mode) {
    case TrainMode::kNoCamera: return {true, false, false};
    case TrainMode::kNoRadar: return {false, true, false};
    case TrainMode::kNoIntensity: return {false, false, true};
    default: return {};
  }
}

// ---------------------------------------------------------------------------
// dataset generation and loading

struct GenDataResult {
  data::DatasetManifest manifest;
  fs::path dir;
};

/// Writes dataset shards plus the dataset manifest; deterministic bytes for
/// a fixed (config, seed, scenes). Refuses to overwrite a non-empty
/// directory unless force is set.
inline GenDataResult gen_data(const sim::GenConfig& gen, uint64_t seed, int scenes,
                              int train_scenes, const std::vector<double>& frame_times,
                              const fs::path& out, bool force, int shard_size = 50) {
  if (fs::exists(out) && !fs::is_empty(out) && !force) {
    throw std::runtime_error("output directory not empty (use --force): " +
                             out.string());
  }
  if (frame_times.empty()) {
    throw std::invalid_argument("gen_data: need at least one frame time");
  }
  fs::create_directories(out);

  data::DatasetManifest manifest;
  manifest.scene_count = scenes;
  manifest.train_scene_count = train_scenes;
  manifest.generator = gen;
  manifest.frame_times = frame_times;
  manifest.class_histogram = {{"vehicle", 0}, {"pedestrian", 0}, {"bicyclist", 0}};

  int shard_index = 0;
  json scenes_json = json::array();
  const auto flush = [&]() {
    if (scenes_json.empty()) return;
    char name[32];
    std::snprintf(name, sizeof(name), "shard_%03d.json", shard_index++);
    const json shard = {{"version", data::kDatasetSchemaVersion},
                        {"scenes", scenes_json}};
    data::write_text_file(out / name, shard.dump() + "\n");
    manifest.shards.push_back(name);
    scenes_json = json::array();
  };

  for (int i = 0; i < scenes; ++i) {
    const sim::Scene scene = sim::sample_scene(gen, seed + static_cast<uint64_t>(i));
    for (const auto& actor : scene.actors) {
      manifest.class_histogram[sim::class_name(actor.cls)] += 1;
    }
    json sj = data::to_json(scene);
    json frames = json::array();
    for (const double t : frame_times) {
      frames.push_back(data::to_json(sim::build_frame(scene, t, gen)));
      manifest.frame_count += 1;
    }
    sj["frames"] = frames;
    scenes_json.push_back(sj);
    if (static_cast<int>(scenes_json.size()) >= shard_size) flush();
  }
  flush();
  data::write_text_file(out / "manifest.json", data::to_json(manifest).dump(2) + "\n");
  return {manifest, out};
}

inline GenDataResult gen_data(const sim::GenConfig& gen, uint64_t seed, int scenes,
                              int train_scenes, double frame_time, const fs::path& out,
                              bool force, int shard_size = 50) {
  return gen_data(gen, seed, scenes, train_scenes, std::vector<double>{frame_time}, out,
                  force, shard_size);
}

/// Everything a training or evaluation run needs, built once per dataset:
/// frames, per-frame tensor caches, targets, and the train/eval split.
struct DatasetBundle {
  data::Dataset dataset;
  double sentinel = 0.0;
  std::vector<net::FrameCache> cache;
  std::vector<net::CellTargets> targets;
  std::vector<size_t> train_indices;
  std::vector<size_t> eval_indices;

  std::vector<net::FrameCache> slice_cache(const std::vector<size_t>& idx) const {
    std::vector<net::FrameCache> out;
    out.reserve(idx.size());
    for (size_t i : idx) out.push_back(cache[i]);
    return out;
  }
  std::vector<net::CellTargets> slice_targets(const std::vector<size_t>& idx) const {
    std::vector<net::CellTargets> out;
    out.reserve(idx.size());
    for (size_t i : idx) out.push_back(targets[i]);
    return out;
  }
  std::vector<sim::SensorFrame> slice_frames(const std::vector<size_t>& idx) const {
    std::vector<sim::SensorFrame> out;
    out.reserve(idx.size());
    for (size_t i : idx) out.push_back(dataset.frames[i]);
    return out;
  }
};

inline double sentinel_prepass(const fs::path& data_dir) {
  const data::Dataset ds = data::load_dataset(data_dir);
  std::vector<sim::SensorFrame> train_frames;
  for (size_t i = 0; i < ds.frames.size(); ++i) {
    if (ds.frame_scene_index[i] < ds.manifest.train_scene_count) {
      train_frames.push_back(ds.frames[i]);
    }
  }
  const double sentinel = drop::compute_sentinel(train_frames);
  long long points = 0;
  for (const auto& f : train_frames) {
    for (const auto& s : f.lidar_sweeps) points += static_cast<long long>(s.points.size());
  }
  data::write_sentinel(data_dir, sentinel, points);
  return sentinel;
}

inline DatasetBundle load_bundle(const fs::path& data_dir, const ExperimentConfig& cfg) {
  DatasetBundle bundle;
  bundle.dataset = data::load_dataset(data_dir);
  const auto sentinel = data::load_sentinel(data_dir);
  if (!sentinel) {
    throw std::runtime_error(
        "no sentinel.json in " + data_dir.string() +
        "; run the prepass first: msd sentinel --data " + data_dir.string());
  }
  bundle.sentinel = *sentinel;
  bundle.cache =
      net::build_dataset_cache(bundle.dataset.frames, cfg.grid, cfg.rv, bundle.sentinel);
  bundle.targets.reserve(bundle.dataset.frames.size());
  for (const auto& f : bundle.dataset.frames) {
    bundle.targets.push_back(net::encode_targets(f.labels, cfg.grid));
  }
  for (size_t i = 0; i < bundle.dataset.frames.size(); ++i) {
    if (bundle.dataset.frame_scene_index[i] < bundle.dataset.manifest.train_scene_count) {
      bundle.train_indices.push_back(i);
    } else {
      bundle.eval_indices.push_back(i);
    }
  }
  return bundle;
}

// ---------------------------------------------------------------------------
// runs

struct RunResult {
  std::string run_id;
  fs::path run_dir;
  data::CheckpointMeta meta;
  net::TrainLog log;
  double wall_clock_s = 0.0;
};

/// Trains one (mode, seed) run and writes the run directory: the resolved
/// config, checkpoint, training log, and run manifest.
inline RunResult train_run(const ExperimentConfig& cfg, const DatasetBundle& bundle,
                           TrainMode mode, uint64_t seed, const fs::path& run_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(run_dir);

  net::TrainOptions opt;
  opt.arch = cfg.model;
  opt.grid = cfg.grid;
  opt.rv_spec = cfg.rv;
  opt.train = cfg.train;
  opt.train.seed = seed;
  opt.loss = cfg.loss;
  opt.dropout = dropout_for_mode(cfg, mode);
  opt.dropout.sentinel = bundle.sentinel;
  opt.forced_mask = forced_mask_for_mode(mode);

  const auto train_cache = bundle.slice_cache(bundle.train_indices);
  const auto train_targets = bundle.slice_targets(bundle.train_indices);
  const auto val_cache = bundle.slice_cache(bundle.eval_indices);
  const auto val_targets = bundle.slice_targets(bundle.eval_indices);

  net::TrainResult trained =
      net::train(train_cache, train_targets, opt, &val_cache, &val_targets);

  RunResult result{std::string("train-") + to_string(mode) + "-seed" +
                       std::to_string(seed),
                   run_dir,
                   {},
                   std::move(trained.log),
                   0.0};
  result.meta.arch = cfg.model;
  result.meta.grid = cfg.grid;
  result.meta.rv = cfg.rv;
  result.meta.dropout = opt.dropout;
  result.meta.forced_mask = opt.forced_mask;
  result.meta.train_mode = to_string(mode);
  result.meta.seed = seed;
  result.meta.steps = result.log.completed_steps;
  result.meta.loss = cfg.loss;

  data::write_text_file(run_dir / "config.json", to_json(cfg).dump(2) + "\n");
  data::save_checkpoint(run_dir / "checkpoint", trained.model, result.meta);
  data::write_text_file(run_dir / "training_log.json",
                        data::to_json(result.log).dump(2) + "\n");

  result.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const json manifest = {{"run_id", result.run_id},
                         {"config_hash", config_hash_hex(cfg)},
                         {"checkpoint", "checkpoint"},
                         {"mode", to_string(mode)},
                         {"seed", seed},
                         {"wall_clock_s", result.wall_clock_s},
                         {"deterministic", cfg.train.deterministic},
                         {"diverged", result.log.diverged},
                         {"mask_counts",
                          {{"camera", result.log.mask_camera},
                           {"radar", result.log.mask_radar},
                           {"intensity", result.log.mask_intensity},
                           {"examples", result.log.examples}}}};
  data::write_text_file(run_dir / "manifest.json", manifest.dump(2) + "\n");
  return result;
}

/// Evaluates a checkpoint over the bundle's eval split for each requested
/// mode; the checkpoint's own forced mask stays in effect (an ablation
/// model is always evaluated without its ablated sensor).
inline std::vector<metrics::MetricsReport> eval_checkpoint(
    const ExperimentConfig& cfg, const DatasetBundle& bundle, const net::Model& model,
    const data::CheckpointMeta& meta, const std::vector<drop::EvalMode>& modes,
    const fs::path& report_dir = {}) {
  metrics::EvalOptions opt;
  opt.metric = cfg.metric;
  opt.camera_kind = meta.dropout.camera_kind;
  opt.forced_mask = meta.forced_mask;

  const auto frames = bundle.slice_frames(bundle.eval_indices);
  const auto cache = bundle.slice_cache(bundle.eval_indices);

  std::vector<metrics::MetricsReport> reports;
  for (const auto mode : modes) {
    reports.push_back(metrics::evaluate(model, frames, cache, mode, opt));
  }
  if (!report_dir.empty()) {
    fs::create_directories(report_dir);
    json all = json::array();
    for (const auto& r : reports) {
      std::string tag = drop::to_string(r.mode);
      if (!tag.empty() && tag[0] == '-') tag = "minus_" + tag.substr(1);
      for (auto& ch : tag) ch = static_cast<char>(std::tolower(ch));
      data::write_text_file(report_dir / ("report_" + tag + ".json"),
                            data::to_json(r).dump(2) + "\n");
      all.push_back(data::to_json(r));
    }
    data::write_text_file(report_dir / "reports.json", all.dump(2) + "\n");
  }
  return reports;
}

// ---------------------------------------------------------------------------
// cross-run parallelism

/// Runs independent tasks on up to `jobs` worker threads. Each task owns its
/// outputs; per-run determinism is unaffected by scheduling order.
inline void run_parallel(std::vector<std::function<void()>> tasks, int jobs) {
  jobs = std::max(1, jobs);
  std::atomic<size_t> next{0};
  std::vector<std::thread> workers;
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex err_mutex;
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&]() {
      while (true) {
        const size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        try {
          tasks[i]();
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!failed.exchange(true)) first_error = e.what();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failed) throw std::runtime_error("parallel task failed: " + first_error);
}

// ---------------------------------------------------------------------------
// Table-1-shaped rendering

struct TableRow {
  std::string method;
  std::string eval_mode;  // empty for the native top block
  // per class: ap_full, ap_fov (percent), de (cm); negative when absent
  std::array<double, 3> ap_full{-1, -1, -1};
  std::array<double, 3> ap_fov{-1, -1, -1};
  std::array<double, 3> de_cm{-1, -1, -1};
};

inline TableRow row_from_report(const std::string& method, const std::string& eval_mode,
                                const metrics::MetricsReport& report) {
  TableRow row;
  row.method = method;
  row.eval_mode = eval_mode;
  for (int k = 0; k < 3; ++k) {
    const auto& cr = report.per_class[static_cast<size_t>(k)];
    if (cr.ap_full) row.ap_full[static_cast<size_t>(k)] = 100.0 * *cr.ap_full;
    if (cr.ap_fov) row.ap_fov[static_cast<size_t>(k)] = 100.0 * *cr.ap_fov;
    if (cr.de_cm) row.de_cm[static_cast<size_t>(k)] = *cr.de_cm;
  }
  return row;
}

inline TableRow mean_row(const std::string& method, const std::string& eval_mode,
                         const std::vector<TableRow>& rows) {
  TableRow out;
  out.method = method;
  out.eval_mode = eval_mode;
  for (int k = 0; k < 3; ++k) {
    double af = 0, av = 0, de = 0;
    int naf = 0, nav = 0, nde = 0;
    for (const auto& r : rows) {
      if (r.ap_full[static_cast<size_t>(k)] >= 0) {
        af += r.ap_full[static_cast<size_t>(k)];
        ++naf;
      }
      if (r.ap_fov[static_cast<size_t>(k)] >= 0) {
        av += r.ap_fov[static_cast<size_t>(k)];
        ++nav;
      }
      if (r.de_cm[static_cast<size_t>(k)] >= 0) {
        de += r.de_cm[static_cast<size_t>(k)];
        ++nde;
      }
    }
    out.ap_full[static_cast<size_t>(k)] = naf ? af / naf : -1;
    out.ap_fov[static_cast<size_t>(k)] = nav ? av / nav : -1;
    out.de_cm[static_cast<size_t>(k)] = nde ? de / nde : -1;
  }
  return out;
}

namespace detail {
inline std::string cell(double v) {
  if (v < 0) return "-";
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}
}  // namespace detail

inline std::string render_markdown_table(const std::vector<TableRow>& rows) {
  std::ostringstream out;
  out << "| Method | Eval mode | Veh AP | Veh AP FOV | Veh DE | Ped AP | Ped AP FOV | "
         "Ped DE | Bic AP | Bic AP FOV | Bic DE |\n";
  out << "|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    out << "| " << r.method << " | " << (r.eval_mode.empty() ? "Full" : r.eval_mode);
    for (int k = 0; k < 3; ++k) {
      out << " | " << detail::cell(r.ap_full[static_cast<size_t>(k)]) << " | "
          << detail::cell(r.ap_fov[static_cast<size_t>(k)]) << " | "
          << detail::cell(r.de_cm[static_cast<size_t>(k)]);
    }
    out << " |\n";
  }
  return out.str();
}

inline std::string render_csv_table(const std::vector<TableRow>& rows) {
  std::ostringstream out;
  out << "method,eval_mode,veh_ap,veh_ap_fov,veh_de_cm,ped_ap,ped_ap_fov,ped_de_cm,"
         "bic_ap,bic_ap_fov,bic_de_cm\n";
  for (const auto& r : rows) {
    out << r.method << "," << (r.eval_mode.empty() ? "Full" : r.eval_mode);
    for (int k = 0; k < 3; ++k) {
      out << "," << detail::cell(r.ap_full[static_cast<size_t>(k)]) << ","
          << detail::cell(r.ap_fov[static_cast<size_t>(k)]) << ","
          << detail::cell(r.de_cm[static_cast<size_t>(k)]);
    }
    out << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// experiment recipes

struct SuiteRun {
  TrainMode mode;
  uint64_t seed;
  RunResult result;
  std::map<drop::EvalMode, metrics::MetricsReport> reports;
};

/// Fig. 2 analogue: (Baseline, Full), (Baseline, [-Camera]),
/// (Sensor Dropout, [-Camera]) side by side for one frame.
inline void write_triptych(const ExperimentConfig& cfg, const DatasetBundle& bundle,
                           const fs::path& baseline_ckpt, const fs::path& dropout_ckpt,
                           size_t frame_index, const fs::path& out_png) {
  const data::LoadedCheckpoint base = data::load_checkpoint(baseline_ckpt);
  const data::LoadedCheckpoint drop_ckpt = data::load_checkpoint(dropout_ckpt);
  const sim::SensorFrame& frame = bundle.dataset.frames[frame_index];
  const net::FrameCache& cache = bundle.cache[frame_index];

  const auto detections = [&](const data::LoadedCheckpoint& ckpt, drop::EvalMode mode) {
    const drop::ModalityMask mask = drop::mask_for_eval(mode) | ckpt.meta.forced_mask;
    const net::ModelInput input = net::build_model_input(
        cache, cfg.grid, cfg.rv, mask, ckpt.meta.dropout.camera_kind);
    net::Workspace ws;
    ckpt.model.forward(input, ws);
    return net::decode_detections(ckpt.model.dense_output(ws), cfg.grid,
                                  cfg.metric.score_threshold, cfg.metric.nms_iou);
  };

  const std::vector<plot::Image> panels = {
      plot::render_bev_panel(frame, detections(base, drop::EvalMode::kFull), cfg.grid,
                             "BASELINE"),
      plot::render_bev_panel(frame, detections(base, drop::EvalMode::kMinusCamera),
                             cfg.grid, "BASELINE [-CAMERA]"),
      plot::render_bev_panel(frame, detections(drop_ckpt, drop::EvalMode::kMinusCamera),
                             cfg.grid, "DROPOUT [-CAMERA]"),
  };
  plot::write_png(out_png, plot::hstack(panels));
}

/// Trains all five Table-1 method rows for every configured seed and
/// evaluates baseline and dropout under every eval mode (ablation rows in
/// their native mode only). Returns every run plus the rendered matrix.
struct AblationSuiteResult {
  std::vector<SuiteRun> runs;
  std::vector<TableRow> table;  // seed means, Table-1 ordering
  fs::path table_md, table_csv, triptych_png;
};

inline const SuiteRun& find_run(const std::vector<SuiteRun>& runs, TrainMode mode,
                                uint64_t seed) {
  for (const auto& r : runs) {
    if (r.mode == mode && r.seed == seed) return r;
  }
  throw std::out_of_range("no such run");
}

inline AblationSuiteResult ablation_suite(const ExperimentConfig& cfg,
                                          const DatasetBundle& bundle,
                                          const fs::path& out_dir, int jobs) {
  cfg.validate();
  fs::create_directories(out_dir);
  const std::vector<TrainMode> modes = {TrainMode::kBaseline, TrainMode::kNoCamera,
                                        TrainMode::kNoRadar, TrainMode::kNoIntensity,
                                        TrainMode::kDropout};
  const std::vector<drop::EvalMode> all_eval = {
      drop::EvalMode::kFull, drop::EvalMode::kMinusCamera, drop::EvalMode::kMinusRadar,
      drop::EvalMode::kMinusIntensity};

  AblationSuiteResult suite;
  suite.runs.reserve(modes.size() * cfg.seeds.size());
  for (const auto mode : modes) {
    for (const auto seed : cfg.seeds) {
      suite.runs.push_back({mode, seed, {}, {}});
    }
  }

  std::vector<std::function<void()>> tasks;
  for (auto& run : suite.runs) {
    tasks.push_back([&cfg, &bundle, &run, &out_dir, &all_eval]() {
      const fs::path run_dir = out_dir / (std::string(to_string(run.mode)) + "-seed" +
                                          std::to_string(run.seed));
      run.result = train_run(cfg, bundle, run.mode, run.seed, run_dir);
      const data::LoadedCheckpoint ckpt = data::load_checkpoint(run_dir / "checkpoint");
      const bool degraded_rows =
          run.mode == TrainMode::kBaseline || run.mode == TrainMode::kDropout;
      const std::vector<drop::EvalMode> modes_here =
          degraded_rows ? all_eval : std::vector<drop::EvalMode>{drop::EvalMode::kFull};
      const auto reports = eval_checkpoint(cfg, bundle, ckpt.model, ckpt.meta,
                                           modes_here, run_dir / "reports");
      for (const auto& r : reports) run.reports[r.mode] = r;
    });
  }
  run_parallel(std::move(tasks), jobs);

  // Table-1 ordering: native block, then degraded blocks
  const auto mean_over_seeds = [&](TrainMode mode, drop::EvalMode emode,
                                   const std::string& label) {
    std::vector<TableRow> rows;
    for (const auto seed : cfg.seeds) {
      const auto& run = find_run(suite.runs, mode, seed);
      rows.push_back(
          row_from_report(mode_display_name(mode), label, run.reports.at(emode)));
    }
    return mean_row(mode_display_name(mode), label, rows);
  };
  for (const auto mode : modes) {
    suite.table.push_back(mean_over_seeds(mode, drop::EvalMode::kFull, ""));
  }
  for (const auto emode : {drop::EvalMode::kMinusCamera, drop::EvalMode::kMinusRadar,
                           drop::EvalMode::kMinusIntensity}) {
    suite.table.push_back(
        mean_over_seeds(TrainMode::kBaseline, emode, drop::to_string(emode)));
    suite.table.push_back(
        mean_over_seeds(TrainMode::kDropout, emode, drop::to_string(emode)));
  }

  suite.table_md = out_dir / "table.md";
  suite.table_csv = out_dir / "table.csv";
  data::write_text_file(suite.table_md, render_markdown_table(suite.table));
  data::write_text_file(suite.table_csv, render_csv_table(suite.table));

  // qualitative triptych on the first eval frame with the first seed
  if (!bundle.eval_indices.empty()) {
    suite.triptych_png = out_dir / "triptych.png";
    const fs::path base_dir = out_dir / (std::string("baseline-seed") +
                                         std::to_string(cfg.seeds[0]) + "/checkpoint");
    const fs::path drop_dir = out_dir / (std::string("dropout-seed") +
                                         std::to_string(cfg.seeds[0]) + "/checkpoint");
    write_triptych(cfg, bundle, base_dir, drop_dir, bundle.eval_indices[0],
                   suite.triptych_png);
  }
  return suite;
}

// ---------------------------------------------------------------------------
// dropout-probability sweep (Fig. 3a) and kind comparison (Fig. 3b)

struct SweepPoint {
  double p = 0.0;
  uint64_t seed = 0;
  metrics::MetricsReport full;
  metrics::MetricsReport minus_camera;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  fs::path csv, png;
};

inline double macro_ap(const metrics::MetricsReport& r, bool fov = false) {
  double sum = 0.0;
  int n = 0;
  for (const auto& cr : r.per_class) {
    const auto& ap = fov ? cr.ap_fov : cr.ap_full;
    if (ap) {
      sum += *ap;
      ++n;
    }
  }
  return n ? 100.0 * sum / n : -1.0;
}

/// Trains one camera-dropout model per probability (radar/intensity dropout
/// off so the p = 0 point coincides with the baseline) and reports AP under
/// Full and [-Camera] evaluation.
inline SweepResult sweep_dropout(const ExperimentConfig& cfg, const DatasetBundle& bundle,
                                 const std::vector<double>& p_values,
                                 const fs::path& out_dir, int jobs) {
  fs::create_directories(out_dir);
  SweepResult result;
  for (const double p : p_values) {
    for (const auto seed : cfg.seeds) {
      result.points.push_back({p, seed, {}, {}});
    }
  }
  std::vector<std::function<void()>> tasks;
  for (auto& point : result.points) {
    tasks.push_back([&cfg, &bundle, &point, &out_dir]() {
      ExperimentConfig run_cfg = cfg;
      run_cfg.dropout.p_camera = point.p;
      run_cfg.dropout.p_radar = 0.0;
      run_cfg.dropout.p_intensity = 0.0;
      char name[64];
      std::snprintf(name, sizeof(name), "p%.2f-seed%llu", point.p,
                    static_cast<unsigned long long>(point.seed));
      const fs::path run_dir = out_dir / name;
      train_run(run_cfg, bundle, TrainMode::kDropout, point.seed, run_dir);
      const data::LoadedCheckpoint ckpt = data::load_checkpoint(run_dir / "checkpoint");
      const auto reports = eval_checkpoint(
          run_cfg, bundle, ckpt.model, ckpt.meta,
          {drop::EvalMode::kFull, drop::EvalMode::kMinusCamera}, run_dir / "reports");
      point.full = reports[0];
      point.minus_camera = reports[1];
    });
  }
  run_parallel(std::move(tasks), jobs);

  std::ostringstream csv;
  csv << "p,seed,ap_full_macro,ap_minus_camera_macro,ap_full_veh,ap_minus_camera_veh\n";
  std::map<double, std::pair<std::vector<double>, std::vector<double>>> by_p;
  for (const auto& point : result.points) {
    const double full_macro = macro_ap(point.full);
    const double minus_macro = macro_ap(point.minus_camera);
    csv << point.p << "," << point.seed << "," << full_macro << "," << minus_macro << ","
        << (point.full.per_class[0].ap_full ? 100.0 * *point.full.per_class[0].ap_full
                                            : -1.0)
        << ","
        << (point.minus_camera.per_class[0].ap_full
                ? 100.0 * *point.minus_camera.per_class[0].ap_full
                : -1.0)
        << "\n";
    by_p[point.p].first.push_back(full_macro);
    by_p[point.p].second.push_back(minus_macro);
  }
  csv << "# seed means\n";
  plot::Series full_series{"AP FULL", {}, {}, plot::kBlue};
  plot::Series minus_series{"AP [-CAMERA]", {}, {}, plot::kRed};
  for (const auto& [p, vals] : by_p) {
    const auto mean = [](const std::vector<double>& v) {
      double s = 0;
      for (double x : v) s += x;
      return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    };
    csv << p << ",mean," << mean(vals.first) << "," << mean(vals.second) << ",,\n";
    full_series.x.push_back(p);
    full_series.y.push_back(mean(vals.first));
    minus_series.x.push_back(p);
    minus_series.y.push_back(mean(vals.second));
  }
  result.csv = out_dir / "sweep.csv";
  data::write_text_file(result.csv, csv.str());
  result.png = out_dir / "sweep.png";
  plot::write_png(result.png,
                  plot::line_plot({full_series, minus_series},
                                  "AP VS CAMERA DROPOUT PROBABILITY"));
  return result;
}

struct KindComparisonResult {
  // [kind][seed] reports
  std::map<std::string, std::vector<std::pair<metrics::MetricsReport,
                                              metrics::MetricsReport>>> by_kind;
  std::map<std::string, std::vector<net::TrainLog>> logs;
  fs::path csv, md;
};

/// Feature vs input camera dropout at the configured probabilities, same
/// seeds; the non-camera mask streams coincide by construction (the mask
/// sampler draws identically; only the application differs).
inline KindComparisonResult compare_dropout_kind(const ExperimentConfig& cfg,
                                                 const DatasetBundle& bundle,
                                                 const fs::path& out_dir, int jobs) {
  fs::create_directories(out_dir);
  KindComparisonResult result;
  struct Job {
    std::string kind;
    uint64_t seed;
    metrics::MetricsReport full, minus_camera;
    net::TrainLog log;
  };
  std::vector<Job> jobs_list;
  for (const std::string kind : {"feature", "input"}) {
    for (const auto seed : cfg.seeds) jobs_list.push_back({kind, seed, {}, {}, {}});
  }
  std::vector<std::function<void()>> tasks;
  for (auto& job : jobs_list) {
    tasks.push_back([&cfg, &bundle, &job, &out_dir]() {
      ExperimentConfig run_cfg = cfg;
      run_cfg.dropout.camera_kind = job.kind == "input" ? drop::CameraDropKind::kInput
                                                        : drop::CameraDropKind::kFeature;
      const fs::path run_dir =
          out_dir / (job.kind + "-seed" + std::to_string(job.seed));
      const RunResult run = train_run(run_cfg, bundle, TrainMode::kDropout, job.seed,
                                      run_dir);
      job.log = run.log;
      const data::LoadedCheckpoint ckpt = data::load_checkpoint(run_dir / "checkpoint");
      const auto reports = eval_checkpoint(
          run_cfg, bundle, ckpt.model, ckpt.meta,
          {drop::EvalMode::kFull, drop::EvalMode::kMinusCamera}, run_dir / "reports");
      job.full = reports[0];
      job.minus_camera = reports[1];
    });
  }
  run_parallel(std::move(tasks), jobs);

  for (auto& job : jobs_list) {
    result.by_kind[job.kind].emplace_back(job.full, job.minus_camera);
    result.logs[job.kind].push_back(job.log);
  }

  std::ostringstream csv;
  csv << "kind,eval_mode,ap_macro,ap_veh,ap_ped,ap_bic\n";
  std::ostringstream md;
  md << "| Camera dropout kind | Eval mode | AP macro | Veh AP | Ped AP | Bic AP |\n";
  md << "|---|---|---|---|---|---|\n";
  for (const std::string kind : {"feature", "input"}) {
    for (const bool minus : {false, true}) {
      double macro = 0;
      std::array<double, 3> per{0, 0, 0};
      const auto& reports = result.by_kind[kind];
      for (const auto& [full, mc] : reports) {
        const auto& r = minus ? mc : full;
        macro += macro_ap(r);
        for (int k = 0; k < 3; ++k) {
          per[static_cast<size_t>(k)] +=
              r.per_class[static_cast<size_t>(k)].ap_full
                  ? 100.0 * *r.per_class[static_cast<size_t>(k)].ap_full
                  : 0.0;
        }
      }
      const double n = static_cast<double>(reports.size());
      csv << kind << "," << (minus ? "-Camera" : "Full") << "," << macro / n;
      md << "| " << kind << " | " << (minus ? "[-Camera]" : "Full") << " | "
         << detail::cell(macro / n);
      for (int k = 0; k < 3; ++k) {
        csv << "," << per[static_cast<size_t>(k)] / n;
        md << " | " << detail::cell(per[static_cast<size_t>(k)] / n);
      }
      csv << "\n";
      md << " |\n";
    }
  }
  result.csv = out_dir / "kind_comparison.csv";
  result.md = out_dir / "kind_comparison.md";
  data::write_text_file(result.csv, csv.str());
  data::write_text_file(result.md, md.str());
  return result;
}

}  // namespace msd::harness

#endif  // MSD_HARNESS_HPP
