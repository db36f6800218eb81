#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "msd/harness.hpp"
#include "msd/plot.hpp"

using namespace msd;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("msd_harness_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

/// Very small end-to-end configuration for harness-level tests.
harness::ExperimentConfig micro_config() {
  harness::ExperimentConfig cfg = harness::desk_config();
  cfg.generator.map_length = 30.0;
  cfg.generator.map_width = 22.0;
  cfg.generator.actor_count_min = 2;
  cfg.generator.actor_count_max = 4;
  cfg.generator.lidar_rays = 120;
  cfg.generator.camera_resolution = 64;
  cfg.grid = raster::GridSpec{32.0, 24.0, 1.0};
  cfg.rv = raster::RvSpec{48};
  cfg.model.rv_width = 4;
  cfg.model.radar_width = 4;
  cfg.model.bev_width = 6;
  cfg.train.steps = 12;
  cfg.train.batch_size = 2;
  cfg.train.val_every = 0;
  cfg.seeds = {1};
  cfg.scenes = 6;
  cfg.train_scenes = 4;
  cfg.generator.duration_s = 4.0;
  cfg.frame_times = {0.9};
  return cfg;
}

harness::DatasetBundle make_bundle(const harness::ExperimentConfig& cfg,
                                   const fs::path& dir) {
  harness::gen_data(cfg.generator, 11, cfg.scenes, cfg.train_scenes, cfg.frame_times,
                    dir, true);
  harness::sentinel_prepass(dir);
  return harness::load_bundle(dir, cfg);
}

}  // namespace

TEST_CASE("train_run writes a complete, reproducible run directory") {
  const harness::ExperimentConfig cfg = micro_config();
  TempDir dir("train_run");
  const auto bundle = make_bundle(cfg, dir.path / "data");

  const auto r1 = harness::train_run(cfg, bundle, harness::TrainMode::kDropout, 1,
                                     dir.path / "run1");
  CHECK(fs::exists(dir.path / "run1/config.json"));
  CHECK(fs::exists(dir.path / "run1/manifest.json"));
  CHECK(fs::exists(dir.path / "run1/training_log.json"));
  CHECK(fs::exists(dir.path / "run1/checkpoint/params.bin"));
  CHECK(!r1.log.diverged);

  // reproducibility: a second run from the same config and seed yields an
  // identical checkpoint
  const auto r2 = harness::train_run(cfg, bundle, harness::TrainMode::kDropout, 1,
                                     dir.path / "run2");
  CHECK(data::read_text_file(dir.path / "run1/checkpoint/params.bin") ==
        data::read_text_file(dir.path / "run2/checkpoint/params.bin"));
  CHECK(data::read_text_file(dir.path / "run1/checkpoint/manifest.json") ==
        data::read_text_file(dir.path / "run2/checkpoint/manifest.json"));

  const auto manifest = data::read_json_file(dir.path / "run1/manifest.json");
  CHECK(manifest.at("mode") == "dropout");
  CHECK(manifest.at("config_hash") == harness::config_hash_hex(cfg));
  // mask bookkeeping: every example logged, counts match the training log
  const auto& counts = manifest.at("mask_counts");
  CHECK(counts.at("examples") == cfg.train.steps * cfg.train.batch_size);
  CHECK(counts.at("camera") == r1.log.mask_camera);
  CHECK(counts.at("radar") == r1.log.mask_radar);
  CHECK(counts.at("intensity") == r1.log.mask_intensity);
}

TEST_CASE("ablation modes force the modality off through training and eval") {
  const harness::ExperimentConfig cfg = micro_config();
  TempDir dir("ablation");
  const auto bundle = make_bundle(cfg, dir.path / "data");

  const auto run = harness::train_run(cfg, bundle, harness::TrainMode::kNoCamera, 1,
                                      dir.path / "nc");
  CHECK(run.log.camera_pixels_read == 0);
  CHECK(run.log.mask_camera == run.log.examples);

  const auto ckpt = data::load_checkpoint(dir.path / "nc/checkpoint");
  CHECK(ckpt.meta.forced_mask.drop_camera);
  // Full-mode eval of a no-camera model equals its [-Camera] eval
  const auto reports = harness::eval_checkpoint(
      cfg, bundle, ckpt.model, ckpt.meta,
      {drop::EvalMode::kFull, drop::EvalMode::kMinusCamera});
  CHECK(data::to_json(reports[0])["per_class"].dump() ==
        data::to_json(reports[1])["per_class"].dump());
}

TEST_CASE("eval_checkpoint twice produces identical reports") {
  const harness::ExperimentConfig cfg = micro_config();
  TempDir dir("eval_det");
  const auto bundle = make_bundle(cfg, dir.path / "data");
  const auto run = harness::train_run(cfg, bundle, harness::TrainMode::kBaseline, 2,
                                      dir.path / "run");
  const auto ckpt = data::load_checkpoint(dir.path / "run/checkpoint");
  const auto a = harness::eval_checkpoint(cfg, bundle, ckpt.model, ckpt.meta,
                                          {drop::EvalMode::kMinusIntensity});
  const auto b = harness::eval_checkpoint(cfg, bundle, ckpt.model, ckpt.meta,
                                          {drop::EvalMode::kMinusIntensity});
  CHECK(data::to_json(a[0]).dump() == data::to_json(b[0]).dump());
}

TEST_CASE("ablation suite emits the 5-mode matrix, reports, and triptych") {
  const harness::ExperimentConfig cfg = micro_config();
  TempDir dir("suite");
  const auto bundle = make_bundle(cfg, dir.path / "data");
  const auto suite = harness::ablation_suite(cfg, bundle, dir.path / "suite", 2);

  CHECK(suite.runs.size() == 5);
  // 5 native rows + 3 degraded blocks x 2 rows
  CHECK(suite.table.size() == 11);
  CHECK(suite.table[0].method == "Baseline");
  CHECK(suite.table[4].method == "Sensor Dropout");
  CHECK(suite.table[5].eval_mode == "-Camera");
  CHECK(fs::exists(suite.table_md));
  CHECK(fs::exists(suite.table_csv));
  CHECK(fs::exists(suite.triptych_png));
  // every run directory carries its reports
  CHECK(fs::exists(dir.path / "suite/baseline-seed1/reports/report_full.json"));
  CHECK(fs::exists(dir.path / "suite/dropout-seed1/reports/report_minus_camera.json"));
  // ablation rows are evaluated in their native mode only
  CHECK(fs::exists(dir.path / "suite/no-camera-seed1/reports/report_full.json"));
  CHECK(!fs::exists(dir.path / "suite/no-camera-seed1/reports/report_minus_camera.json"));

  const std::string md = data::read_text_file(suite.table_md);
  CHECK(md.find("| Baseline |") != std::string::npos);
  CHECK(md.find("No camera") != std::string::npos);
  CHECK(md.find("Sensor Dropout") != std::string::npos);
}

TEST_CASE("sweep and kind comparison emit their tables") {
  const harness::ExperimentConfig cfg = micro_config();
  TempDir dir("sweep");
  const auto bundle = make_bundle(cfg, dir.path / "data");

  const auto sweep = harness::sweep_dropout(cfg, bundle, {0.0, 0.5}, dir.path / "sweep", 2);
  CHECK(sweep.points.size() == 2);
  CHECK(fs::exists(sweep.csv));
  CHECK(fs::exists(sweep.png));
  const std::string csv = data::read_text_file(sweep.csv);
  CHECK(csv.find("p,seed,ap_full_macro") != std::string::npos);

  const auto kind = harness::compare_dropout_kind(cfg, bundle, dir.path / "kind", 2);
  CHECK(fs::exists(kind.csv));
  CHECK(fs::exists(kind.md));
  REQUIRE(kind.by_kind.count("feature") == 1);
  REQUIRE(kind.by_kind.count("input") == 1);
  // identical seeds draw identical mask streams: the non-camera mask counts
  // of the two kinds must coincide exactly
  REQUIRE(kind.logs.at("feature").size() == kind.logs.at("input").size());
  for (size_t i = 0; i < kind.logs.at("feature").size(); ++i) {
    CHECK(kind.logs.at("feature")[i].mask_radar == kind.logs.at("input")[i].mask_radar);
    CHECK(kind.logs.at("feature")[i].mask_intensity ==
          kind.logs.at("input")[i].mask_intensity);
    CHECK(kind.logs.at("feature")[i].mask_camera == kind.logs.at("input")[i].mask_camera);
  }
  const std::string md = data::read_text_file(kind.md);
  CHECK(md.find("feature") != std::string::npos);
  CHECK(md.find("input") != std::string::npos);
}

TEST_CASE("png writer produces a well-formed file") {
  TempDir dir("png");
  plot::Image img(40, 30, plot::kWhite);
  img.line(0, 0, 39, 29, plot::kRed);
  plot::draw_text(img, 2, 2, "AP 0.95", plot::kBlack);
  const fs::path file = dir.path / "test.png";
  plot::write_png(file, img);

  std::ifstream in(file, std::ios::binary);
  REQUIRE(in.good());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  REQUIRE(bytes.size() > 50);
  const uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  for (int i = 0; i < 8; ++i) CHECK(bytes[static_cast<size_t>(i)] == sig[i]);
  // IHDR directly after the signature, IEND at the tail
  CHECK(std::string(bytes.begin() + 12, bytes.begin() + 16) == "IHDR");
  CHECK(std::string(bytes.end() - 8, bytes.end() - 4) == "IEND");

  // deterministic bytes
  plot::write_png(dir.path / "test2.png", img);
  CHECK(data::read_text_file(file) == data::read_text_file(dir.path / "test2.png"));
}

TEST_CASE("bev panel rendering is deterministic") {
  const harness::ExperimentConfig cfg = micro_config();
  const sim::Scene scene = sim::sample_scene(cfg.generator, 5);
  const sim::SensorFrame frame = sim::build_frame(scene, 0.9, cfg.generator);
  std::vector<metrics::Detection> dets(1);
  dets[0].box = {{4.0, 2.0}, 0.3, 4.0, 2.0};
  dets[0].score = 0.9;
  for (auto& w : dets[0].waypoints) w = {4.0, 2.0};
  TempDir dir("panel");
  const plot::Image a = plot::render_bev_panel(frame, dets, cfg.grid, "TEST");
  const plot::Image b = plot::render_bev_panel(frame, dets, cfg.grid, "TEST");
  CHECK(a.rgb() == b.rgb());
  plot::write_png(dir.path / "a.png", a);
  plot::write_png(dir.path / "b.png", b);
  CHECK(data::read_text_file(dir.path / "a.png") ==
        data::read_text_file(dir.path / "b.png"));
}

TEST_CASE("cli binary end-to-end: gen-data determinism and sentinel") {
  const char* bin = std::getenv("MSD_CLI_BIN");
  if (!bin) return;  // only run under ctest where the path is provided
  TempDir dir("cli");
  const std::string base = std::string(bin) + " gen-data --scenes 4 --train 3 --seed 1 ";
  REQUIRE(std::system((base + "--out " + (dir.path / "a").string() +
                       " > /dev/null 2>&1").c_str()) == 0);
  REQUIRE(std::system((base + "--out " + (dir.path / "b").string() +
                       " > /dev/null 2>&1").c_str()) == 0);
  CHECK(data::read_text_file(dir.path / "a/shard_000.json") ==
        data::read_text_file(dir.path / "b/shard_000.json"));
  CHECK(data::read_text_file(dir.path / "a/manifest.json") ==
        data::read_text_file(dir.path / "b/manifest.json"));

  // refusal without --force
  CHECK(std::system((base + "--out " + (dir.path / "a").string() +
                     " > /dev/null 2>&1").c_str()) != 0);

  // scenes 0: empty manifest, exit 0
  REQUIRE(std::system((std::string(bin) + " gen-data --scenes 0 --out " +
                       (dir.path / "empty").string() + " > /dev/null 2>&1")
                          .c_str()) == 0);
  const auto manifest = data::read_json_file(dir.path / "empty/manifest.json");
  CHECK(manifest.at("scene_count") == 0);

  REQUIRE(std::system((std::string(bin) + " sentinel --data " +
                       (dir.path / "a").string() + " > /dev/null 2>&1")
                          .c_str()) == 0);
  CHECK(fs::exists(dir.path / "a/sentinel.json"));

  // missing sentinel produces an instructive error naming the prepass
  const std::string train_cmd = std::string(bin) + " train --data " +
                                (dir.path / "b").string() + " --mode dropout --out " +
                                (dir.path / "run").string() + " 2> " +
                                (dir.path / "err.txt").string();
  CHECK(std::system(train_cmd.c_str()) != 0);
  const std::string err = data::read_text_file(dir.path / "err.txt");
  CHECK(err.find("msd sentinel") != std::string::npos);
}
