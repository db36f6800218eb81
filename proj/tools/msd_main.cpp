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

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "msd/harness.hpp"

namespace fs = std::filesystem;
using namespace msd;

namespace {

fs::path output_root() {
  const char* env = std::getenv("MSD_OUT");
  return env && *env ? fs::path(env) : fs::path("out");
}

harness::ExperimentConfig load_config(const std::string& path, bool desk_scale) {
  if (!path.empty()) {
    return harness::experiment_config_from_json(data::read_json_file(path));
  }
  return desk_scale ? harness::desk_config() : harness::default_config();
}

std::vector<drop::EvalMode> parse_modes(const std::string& csv) {
  std::vector<drop::EvalMode> modes;
  std::string token;
  std::istringstream in(csv);
  while (std::getline(in, token, ',')) {
    if (!token.empty()) modes.push_back(drop::eval_mode_from_string(token));
  }
  if (modes.empty()) modes.push_back(drop::EvalMode::kFull);
  return modes;
}

std::string mode_file_tag(drop::EvalMode mode) {
  std::string tag = drop::to_string(mode);
  if (!tag.empty() && tag[0] == '-') tag = "minus_" + tag.substr(1);
  for (auto& ch : tag) ch = static_cast<char>(std::tolower(ch));
  return tag;
}

void print_reports(const std::vector<harness::TableRow>& rows) {
  std::cout << harness::render_markdown_table(rows);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"msd - multi-sensor detection/prediction with sensor dropout"};
  app.require_subcommand(1);

  std::string config_path;
  bool desk_scale = true;
  int jobs = 2;
  app.add_option("--config", config_path, "experiment config JSON (msd/1)");
  app.add_flag("--desk-scale,!--full-scale", desk_scale,
               "desk-scale defaults (default); --full-scale selects the "
               "full-resolution setup");
  app.add_option("--jobs", jobs, "cross-run parallelism");

  // config ---------------------------------------------------------------
  auto* config_cmd =
      app.add_subcommand("config", "print the resolved experiment config JSON");

  // gen-data ----------------------------------------------------------------
  auto* gen = app.add_subcommand("gen-data", "generate dataset shards");
  uint64_t gen_seed = 1;
  int gen_scenes = -1, gen_train = -1;
  std::string gen_out;
  bool gen_force = false;
  gen->add_option("--seed", gen_seed, "base scene seed");
  gen->add_option("--scenes", gen_scenes, "number of scenes");
  gen->add_option("--train", gen_train, "scenes reserved for the training split");
  gen->add_option("--out", gen_out, "output directory");
  gen->add_flag("--force", gen_force, "overwrite a non-empty output directory");

  // sentinel ----------------------------------------------------------------
  auto* sentinel = app.add_subcommand(
      "sentinel", "prepass: mean training-split LiDAR intensity");
  std::string sentinel_data;
  sentinel->add_option("--data", sentinel_data, "dataset directory")->required();

  // train -------------------------------------------------------------------
  auto* train = app.add_subcommand("train", "train one model");
  std::string train_data, train_mode = "baseline", train_out;
  uint64_t train_seed = 1;
  bool deterministic = true;
  train->add_option("--data", train_data, "dataset directory")->required();
  train->add_option("--mode", train_mode,
                    "baseline|no-camera|no-radar|no-intensity|dropout");
  train->add_option("--seed", train_seed, "training seed");
  train->add_option("--out", train_out, "run directory");
  train->add_flag("--deterministic,!--no-deterministic", deterministic,
                  "deterministic single-threaded training")
      ->default_val(true);

  // eval --------------------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string eval_ckpt, eval_data, eval_modes = "Full,-Camera,-Radar,-Intensity",
              eval_out;
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint directory")->required();
  eval->add_option("--data", eval_data, "dataset directory")->required();
  eval->add_option("--modes", eval_modes, "comma-separated eval modes");
  eval->add_option("--out", eval_out, "report directory");

  // ablation-suite ------------------------------------------------------------
  auto* suite = app.add_subcommand(
      "ablation-suite", "train the 5 method rows and emit the full eval matrix");
  std::string suite_data, suite_out;
  suite->add_option("--data", suite_data, "dataset directory")->required();
  suite->add_option("--out", suite_out, "suite output directory");

  // sweep-dropout -------------------------------------------------------------
  auto* sweep = app.add_subcommand("sweep-dropout",
                                   "camera dropout probability sweep");
  std::string sweep_data, sweep_out, sweep_p = "0,0.1,0.2,0.5,0.9";
  sweep->add_option("--data", sweep_data, "dataset directory")->required();
  sweep->add_option("--p-values", sweep_p, "comma-separated probabilities");
  sweep->add_option("--out", sweep_out, "sweep output directory");

  // compare-dropout-kind -------------------------------------------------------
  auto* kind = app.add_subcommand("compare-dropout-kind",
                                  "feature vs input camera dropout");
  std::string kind_data, kind_out;
  kind->add_option("--data", kind_data, "dataset directory")->required();
  kind->add_option("--out", kind_out, "comparison output directory");

  // plot-bev ------------------------------------------------------------------
  auto* plot_cmd = app.add_subcommand("plot-bev", "render BEV detection plots");
  std::string plot_ckpt, plot_drop_ckpt, plot_data, plot_modes = "Full", plot_out;
  int plot_scene = 0;
  plot_cmd->add_option("--checkpoint", plot_ckpt, "checkpoint directory")->required();
  plot_cmd->add_option("--dropout-checkpoint", plot_drop_ckpt,
                       "second checkpoint for the comparison triptych");
  plot_cmd->add_option("--data", plot_data, "dataset directory")->required();
  plot_cmd->add_option("--scene", plot_scene, "scene index into the dataset");
  plot_cmd->add_option("--modes", plot_modes, "comma-separated eval modes");
  plot_cmd->add_option("--out", plot_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    harness::ExperimentConfig cfg = load_config(config_path, desk_scale);

    if (*config_cmd) {
      std::cout << harness::to_json(cfg).dump(2) << "\n";
      return 0;
    }

    if (*gen) {
      if (gen_scenes >= 0) cfg.scenes = gen_scenes;
      if (gen_train > 0) cfg.train_scenes = gen_train;
      if (cfg.train_scenes >= cfg.scenes) cfg.train_scenes = std::max(1, cfg.scenes - 1);
      const fs::path out = gen_out.empty() ? output_root() / "dataset" : fs::path(gen_out);
      if (cfg.scenes == 0) {
        // empty dataset: manifest only
        if (fs::exists(out) && !fs::is_empty(out) && !gen_force) {
          throw std::runtime_error("output directory not empty (use --force): " +
                                   out.string());
        }
        fs::create_directories(out);
        data::DatasetManifest manifest;
        manifest.scene_count = 0;
        manifest.train_scene_count = 0;
        manifest.generator = cfg.generator;
        manifest.frame_times = cfg.frame_times;
        manifest.class_histogram = {{"vehicle", 0}, {"pedestrian", 0}, {"bicyclist", 0}};
        data::write_text_file(out / "manifest.json",
                              data::to_json(manifest).dump(2) + "\n");
        std::cout << "wrote empty dataset manifest to " << out << "\n";
        return 0;
      }
      const auto result = harness::gen_data(cfg.generator, gen_seed, cfg.scenes,
                                            cfg.train_scenes, cfg.frame_times, out,
                                            gen_force);
      std::cout << "wrote " << result.manifest.scene_count << " scenes ("
                << result.manifest.train_scene_count << " train) to " << out << "\n";
      for (const auto& [name, count] : result.manifest.class_histogram) {
        std::cout << "  " << name << ": " << count << "\n";
      }
      return 0;
    }

    if (*sentinel) {
      const double value = harness::sentinel_prepass(sentinel_data);
      std::cout << "sentinel (mean training LiDAR intensity): " << value << "\n";
      return 0;
    }

    if (*train) {
      cfg.train.deterministic = deterministic;
      const harness::TrainMode mode = harness::train_mode_from_string(train_mode);
      const harness::DatasetBundle bundle = harness::load_bundle(train_data, cfg);
      const fs::path run_dir =
          train_out.empty()
              ? output_root() / (std::string("train-") + train_mode + "-seed" +
                                 std::to_string(train_seed))
              : fs::path(train_out);
      const auto result = harness::train_run(cfg, bundle, mode, train_seed, run_dir);
      std::cout << "run " << result.run_id << ": " << result.log.completed_steps
                << " steps, final loss " << result.log.final_loss << ", "
                << result.wall_clock_s << " s\n"
                << "checkpoint: " << (run_dir / "checkpoint") << "\n";
      if (result.log.diverged) {
        std::cout << "warning: training diverged; checkpoint holds the last good "
                     "parameters\n";
        return 2;
      }
      return 0;
    }

    if (*eval) {
      const harness::DatasetBundle bundle = harness::load_bundle(eval_data, cfg);
      const data::LoadedCheckpoint ckpt = data::load_checkpoint(eval_ckpt);
      if (ckpt.meta.grid.rows() != cfg.grid.rows() ||
          ckpt.meta.grid.cols() != cfg.grid.cols() ||
          ckpt.meta.rv.azimuth_bins != cfg.rv.azimuth_bins) {
        throw std::runtime_error(
            "checkpoint/dataset spec mismatch: grid or rv resolution differs from "
            "the configured specs");
      }
      const fs::path out = eval_out.empty()
                               ? fs::path(eval_ckpt).parent_path() / "reports"
                               : fs::path(eval_out);
      const auto reports = harness::eval_checkpoint(cfg, bundle, ckpt.model, ckpt.meta,
                                                    parse_modes(eval_modes), out);
      std::vector<harness::TableRow> rows;
      for (const auto& r : reports) {
        rows.push_back(harness::row_from_report(ckpt.meta.train_mode,
                                                drop::to_string(r.mode), r));
      }
      print_reports(rows);
      return 0;
    }

    if (*suite) {
      const harness::DatasetBundle bundle = harness::load_bundle(suite_data, cfg);
      const fs::path out =
          suite_out.empty() ? output_root() / "ablation-suite" : fs::path(suite_out);
      const auto result = harness::ablation_suite(cfg, bundle, out, jobs);
      print_reports(result.table);
      std::cout << "table: " << result.table_md << "\ntriptych: " << result.triptych_png
                << "\n";
      return 0;
    }

    if (*sweep) {
      const harness::DatasetBundle bundle = harness::load_bundle(sweep_data, cfg);
      std::vector<double> p_values;
      std::istringstream in(sweep_p);
      std::string token;
      while (std::getline(in, token, ',')) {
        if (!token.empty()) p_values.push_back(std::stod(token));
      }
      const fs::path out =
          sweep_out.empty() ? output_root() / "sweep-dropout" : fs::path(sweep_out);
      const auto result = harness::sweep_dropout(cfg, bundle, p_values, out, jobs);
      std::cout << "sweep csv: " << result.csv << "\nplot: " << result.png << "\n";
      return 0;
    }

    if (*kind) {
      const harness::DatasetBundle bundle = harness::load_bundle(kind_data, cfg);
      const fs::path out =
          kind_out.empty() ? output_root() / "compare-dropout-kind" : fs::path(kind_out);
      const auto result = harness::compare_dropout_kind(cfg, bundle, out, jobs);
      std::cout << data::read_text_file(result.md);
      std::cout << "comparison csv: " << result.csv << "\n";
      return 0;
    }

    if (*plot_cmd) {
      const harness::DatasetBundle bundle = harness::load_bundle(plot_data, cfg);
      // first frame of the requested scene
      size_t frame_index = bundle.dataset.frames.size();
      for (size_t i = 0; i < bundle.dataset.frames.size(); ++i) {
        if (bundle.dataset.frame_scene_index[i] == plot_scene) {
          frame_index = i;
          break;
        }
      }
      if (frame_index >= bundle.dataset.frames.size()) {
        throw std::out_of_range("scene index out of range");
      }
      const fs::path out = plot_out.empty() ? output_root() / "plots" : fs::path(plot_out);
      fs::create_directories(out);
      const data::LoadedCheckpoint ckpt = data::load_checkpoint(plot_ckpt);
      for (const auto mode : parse_modes(plot_modes)) {
        const drop::ModalityMask mask = drop::mask_for_eval(mode) | ckpt.meta.forced_mask;
        const net::ModelInput input =
            net::build_model_input(bundle.cache[frame_index], cfg.grid, cfg.rv, mask,
                                   ckpt.meta.dropout.camera_kind);
        net::Workspace ws;
        ckpt.model.forward(input, ws);
        const auto dets = net::decode_detections(ckpt.model.dense_output(ws), cfg.grid,
                                                 cfg.metric.score_threshold,
                                                 cfg.metric.nms_iou);
        const fs::path file = out / ("bev_scene" + std::to_string(plot_scene) + "_" +
                                     mode_file_tag(mode) + ".png");
        plot::write_png(file,
                        plot::render_bev_panel(bundle.dataset.frames[frame_index], dets,
                                               cfg.grid,
                                               std::string(ckpt.meta.train_mode) + " " +
                                                   drop::to_string(mode)));
        std::cout << "wrote " << file << "\n";
      }
      if (!plot_drop_ckpt.empty()) {
        const fs::path file = out / ("triptych_scene" + std::to_string(plot_scene) +
                                     ".png");
        harness::write_triptych(cfg, bundle, plot_ckpt, plot_drop_ckpt, frame_index,
                                file);
        std::cout << "wrote " << file << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
