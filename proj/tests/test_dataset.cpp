#include <doctest.h>

#include <filesystem>

#include "msd/harness.hpp"
#include "msd/json_io.hpp"

using namespace msd;
namespace fs = std::filesystem;

namespace {

sim::GenConfig tiny_gen() {
  sim::GenConfig cfg;
  cfg.map_length = 40.0;
  cfg.map_width = 26.0;
  cfg.actor_count_min = 2;
  cfg.actor_count_max = 4;
  cfg.lidar_rays = 120;
  cfg.camera_resolution = 64;
  return cfg;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("msd_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("scene/frame JSON round trip is exact") {
  const sim::GenConfig cfg = tiny_gen();
  const sim::Scene scene = sim::sample_scene(cfg, 17);
  const auto j = data::to_json(scene);
  const sim::Scene back = data::scene_from_json(j);
  CHECK(data::to_json(back).dump() == j.dump());

  const sim::SensorFrame frame = sim::build_frame(scene, 0.9, cfg);
  const auto fj = data::to_json(frame);
  const sim::SensorFrame fback = data::frame_from_json(fj);
  CHECK(data::to_json(fback).dump() == fj.dump());
  CHECK(fback.lidar_sweeps.size() == frame.lidar_sweeps.size());
  CHECK(fback.labels.size() == frame.labels.size());
}

TEST_CASE("gen_data writes identical bytes for identical inputs") {
  const sim::GenConfig cfg = tiny_gen();
  TempDir a("gen_a"), b("gen_b");
  harness::gen_data(cfg, 1, 6, 4, 0.9, a.path, true, 3);
  harness::gen_data(cfg, 1, 6, 4, 0.9, b.path, true, 3);
  for (const auto& name : {"manifest.json", "shard_000.json", "shard_001.json"}) {
    CHECK(data::read_text_file(a.path / name) == data::read_text_file(b.path / name));
  }
  // different seed differs
  TempDir c("gen_c");
  harness::gen_data(cfg, 2, 6, 4, 0.9, c.path, true, 3);
  CHECK(data::read_text_file(a.path / "shard_000.json") !=
        data::read_text_file(c.path / "shard_000.json"));
}

TEST_CASE("gen_data refuses a non-empty output dir without force") {
  const sim::GenConfig cfg = tiny_gen();
  TempDir dir("gen_refuse");
  data::write_text_file(dir.path / "existing.txt", "hello");
  CHECK_THROWS_AS(harness::gen_data(cfg, 1, 2, 1, 0.9, dir.path, false),
                  std::runtime_error);
  CHECK_NOTHROW(harness::gen_data(cfg, 1, 2, 1, 0.9, dir.path, true));
}

TEST_CASE("dataset round trip through shards") {
  const sim::GenConfig cfg = tiny_gen();
  TempDir dir("roundtrip");
  const auto gen = harness::gen_data(cfg, 5, 7, 5, 0.9, dir.path, true, 2);
  CHECK(gen.manifest.shards.size() == 4);  // 7 scenes / 2 per shard
  const data::Dataset ds = data::load_dataset(dir.path);
  CHECK(ds.manifest.scene_count == 7);
  CHECK(ds.manifest.train_scene_count == 5);
  CHECK(ds.frames.size() == 7);
  CHECK(ds.frame_scene_index.front() == 0);
  CHECK(ds.frame_scene_index.back() == 6);
  // frames re-render identically from their scene seeds
  const sim::Scene scene0 = sim::sample_scene(cfg, 5);
  const sim::SensorFrame expect = sim::build_frame(scene0, 0.9, cfg);
  CHECK(data::to_json(ds.frames[0]).dump() == data::to_json(expect).dump());
  // class histogram covers every class over enough scenes
  long total = 0;
  for (const auto& [name, count] : gen.manifest.class_histogram) total += count;
  CHECK(total > 0);
}

TEST_CASE("sentinel prepass uses only the training split and persists") {
  const sim::GenConfig cfg = tiny_gen();
  TempDir dir("sentinel");
  harness::gen_data(cfg, 9, 6, 4, 0.9, dir.path, true, 3);
  const double sentinel = harness::sentinel_prepass(dir.path);
  const auto loaded = data::load_sentinel(dir.path);
  REQUIRE(loaded.has_value());
  CHECK(*loaded == sentinel);

  // oracle: mean over the first 4 scenes' frames only
  std::vector<sim::SensorFrame> train_frames;
  for (uint64_t s = 0; s < 4; ++s) {
    train_frames.push_back(sim::build_frame(sim::sample_scene(cfg, 9 + s), 0.9, cfg));
  }
  CHECK(sentinel == doctest::Approx(drop::compute_sentinel(train_frames)).epsilon(1e-12));
}

TEST_CASE("checkpoint save/load round trip") {
  raster::GridSpec grid{24.0, 16.0, 1.0};
  raster::RvSpec rv{32};
  net::ArchConfig arch;
  arch.rv_width = 4;
  arch.radar_width = 4;
  arch.bev_width = 5;
  net::Model model(arch, grid, rv);
  Rng rng(3);
  model.init_params(rng);

  data::CheckpointMeta meta;
  meta.arch = arch;
  meta.grid = grid;
  meta.rv = rv;
  meta.dropout.sentinel = 0.41;
  meta.forced_mask = {false, true, false};
  meta.train_mode = "no-radar";
  meta.seed = 99;
  meta.steps = 12;

  TempDir dir("ckpt");
  data::save_checkpoint(dir.path / "checkpoint", model, meta);
  const data::LoadedCheckpoint loaded = data::load_checkpoint(dir.path / "checkpoint");
  CHECK(loaded.meta.train_mode == "no-radar");
  CHECK(loaded.meta.forced_mask.drop_radar);
  CHECK(loaded.meta.seed == 99);
  REQUIRE(loaded.meta.dropout.sentinel.has_value());
  CHECK(*loaded.meta.dropout.sentinel == 0.41);

  // values round trip through f32
  const auto orig = model.params().snapshot_values();
  const auto back = loaded.model.params().snapshot_values();
  REQUIRE(orig.size() == back.size());
  for (size_t i = 0; i < orig.size(); ++i) {
    CHECK(back[i] == doctest::Approx(orig[i]).epsilon(1e-6));
    CHECK(static_cast<float>(orig[i]) == static_cast<float>(back[i]));
  }

  // saving the loaded model reproduces identical bytes
  data::save_checkpoint(dir.path / "checkpoint2", loaded.model, loaded.meta);
  CHECK(data::read_text_file(dir.path / "checkpoint/params.bin") ==
        data::read_text_file(dir.path / "checkpoint2/params.bin"));
  CHECK(data::read_text_file(dir.path / "checkpoint/manifest.json") ==
        data::read_text_file(dir.path / "checkpoint2/manifest.json"));
}

TEST_CASE("experiment config JSON round trip and validation") {
  harness::ExperimentConfig cfg = harness::desk_config();
  const auto j = harness::to_json(cfg);
  const harness::ExperimentConfig back = harness::experiment_config_from_json(j);
  CHECK(harness::to_json(back).dump() == j.dump());
  CHECK(back.version == "msd/1");

  auto bad = j;
  bad["version"] = "msd/2";
  CHECK_THROWS_AS((void)harness::experiment_config_from_json(bad), std::invalid_argument);

  auto bad_split = j;
  bad_split["train_scenes"] = 1000;
  CHECK_THROWS_AS((void)harness::experiment_config_from_json(bad_split),
                  std::invalid_argument);
}

TEST_CASE("metrics report JSON round trip") {
  metrics::MetricsReport report;
  report.mode = drop::EvalMode::kMinusRadar;
  report.frames = 10;
  report.detections = 42;
  report.labels = 30;
  report.per_class[0].ap_full = 0.85;
  report.per_class[0].ap_fov = 0.84;
  report.per_class[0].de_cm = 36.0;
  report.per_class[0].labels = 20;
  report.per_class[1].labels = 10;  // ap absent
  const auto j = data::to_json(report);
  const auto back = data::metrics_report_from_json(j);
  CHECK(back.mode == drop::EvalMode::kMinusRadar);
  REQUIRE(back.per_class[0].ap_full.has_value());
  CHECK(*back.per_class[0].ap_full == 0.85);
  CHECK(!back.per_class[1].ap_full.has_value());
  CHECK(data::to_json(back).dump() == j.dump());
}
