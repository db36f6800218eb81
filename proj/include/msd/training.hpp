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

#ifndef MSD_TRAINING_HPP
#define MSD_TRAINING_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "msd/fusionnet.hpp"
#include "msd/pipeline.hpp"

namespace msd::net {

// ---------------------------------------------------------------------------
// Target encoding

struct PositiveCell {
  int cell = 0;  // row * cols + col
  int label_index = 0;
  int cls = 0;
  std::array<double, kBoxChannels> box{};
  std::array<double, kTrajChannels> traj{};
};

struct CellTargets {
  int rows = 0, cols = 0;
  std::vector<int8_t> cls_map;  // kBackgroundId where no positive
  std::vector<PositiveCell> positives;
};

/// Rasterizes labels to per-cell targets. A cell is positive for the label
/// whose box contains its center (nearest box center wins ties); the cell
/// containing a label's center is always claimed so that actors smaller
/// than one cell stay detectable.
inline CellTargets encode_targets(const std::vector<sim::GroundTruthLabel>& labels,
                                  const raster::GridSpec& grid) {
  CellTargets out;
  out.rows = grid.rows();
  out.cols = grid.cols();
  const size_t ncells = static_cast<size_t>(out.rows) * out.cols;
  out.cls_map.assign(ncells, static_cast<int8_t>(kBackgroundId));

  std::vector<int> claim(ncells, -1);
  std::vector<double> claim_d2(ncells, std::numeric_limits<double>::infinity());

  const auto try_claim = [&](int r, int c, int label_idx, const geom::Vec2& box_center) {
    const size_t i = static_cast<size_t>(r) * out.cols + c;
    const geom::Vec2 cc = grid.cell_center(r, c);
    const double d2 = (cc - box_center).squared_norm();
    if (d2 < claim_d2[i]) {
      claim_d2[i] = d2;
      claim[i] = label_idx;
    }
  };

  for (size_t li = 0; li < labels.size(); ++li) {
    const geom::OrientedBox& box = labels[li].box;
    const auto corners = box.corners();
    double xmin = corners[0].x, xmax = corners[0].x;
    double ymin = corners[0].y, ymax = corners[0].y;
    for (const auto& p : corners) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
    int r0, c0, r1, c1;
    grid.cell_of({xmin, ymin}, r0, c0);
    grid.cell_of({xmax, ymax}, r1, c1);
    r0 = std::clamp(r0, 0, out.rows - 1);
    r1 = std::clamp(r1, 0, out.rows - 1);
    c0 = std::clamp(c0, 0, out.cols - 1);
    c1 = std::clamp(c1, 0, out.cols - 1);
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        if (box.contains(grid.cell_center(r, c))) {
          try_claim(r, c, static_cast<int>(li), box.center);
        }
      }
    }
    int rc, cc;
    if (grid.cell_of(box.center, rc, cc)) {
      try_claim(rc, cc, static_cast<int>(li), box.center);
    }
  }

  for (size_t i = 0; i < ncells; ++i) {
    if (claim[i] < 0) continue;
    const auto& lab = labels[static_cast<size_t>(claim[i])];
    const int r = static_cast<int>(i) / out.cols;
    const int c = static_cast<int>(i) % out.cols;
    const geom::Vec2 cc = grid.cell_center(r, c);
    PositiveCell pos;
    pos.cell = static_cast<int>(i);
    pos.label_index = claim[i];
    pos.cls = static_cast<int>(lab.cls);
    pos.box[0] = lab.box.center.x - cc.x;
    pos.box[1] = lab.box.center.y - cc.y;
    pos.box[2] = std::log(lab.box.length);
    pos.box[3] = std::log(lab.box.width);
    pos.box[4] = std::sin(2.0 * lab.box.heading);
    pos.box[5] = std::cos(2.0 * lab.box.heading);
    for (int k = 0; k < sim::kFutureSteps; ++k) {
      pos.traj[static_cast<size_t>(2 * k)] =
          lab.future[static_cast<size_t>(k)].x - lab.box.center.x;
      pos.traj[static_cast<size_t>(2 * k + 1)] =
          lab.future[static_cast<size_t>(k)].y - lab.box.center.y;
    }
    out.cls_map[i] = static_cast<int8_t>(pos.cls);
    out.positives.push_back(pos);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Loss

struct LossConfig {
  double w_cls = 1.0;
  double w_box = 1.0;
  double w_traj = 0.5;
  double focal_gamma = 2.0;
  double focal_alpha = 0.25;
  double smooth_l1_beta = 1.0;
};

// The trajectory term is averaged over the 30 waypoints so its scale is
// one waypoint-pair residual, commensurate with the box term.
constexpr double kTrajWaypointNorm = 1.0 / sim::kFutureSteps;

struct LossBreakdown {
  double total = 0.0;
  double cls = 0.0;
  double box = 0.0;
  double traj = 0.0;
  int positives = 0;
};

namespace detail {

inline double smooth_l1(double d, double beta, double* grad) {
  const double ad = std::abs(d);
  if (ad < beta) {
    if (grad) *grad = d / beta;
    return 0.5 * d * d / beta;
  }
  if (grad) *grad = d > 0.0 ? 1.0 : -1.0;
  return ad - 0.5 * beta;
}

}  // namespace detail

/// Focal classification + smooth-L1 box and trajectory regression on
/// positive cells. Gradient buffers are optional; breakdown terms sum to
/// the total. With no positive cells the regression terms are exactly 0.
inline LossBreakdown loss_forward_backward(const nn::Buf& cls, const nn::Buf& box,
                                           const nn::Buf& traj, const CellTargets& targets,
                                           const LossConfig& cfg, nn::Buf* dcls,
                                           nn::Buf* dbox, nn::Buf* dtraj) {
  const size_t ncells = cls.plane();
  const int npos = static_cast<int>(targets.positives.size());
  const double pos_norm = 1.0 / std::max(1, npos);

  if (dcls) {
    dcls->resize(cls.c, cls.h, cls.w);
    dcls->zero();
  }
  if (dbox) {
    dbox->resize(box.c, box.h, box.w);
    dbox->zero();
  }
  if (dtraj) {
    dtraj->resize(traj.c, traj.h, traj.w);
    dtraj->zero();
  }

  LossBreakdown bd;
  bd.positives = npos;

  // focal classification over every cell
  double cls_sum = 0.0;
  for (size_t i = 0; i < ncells; ++i) {
    std::array<double, kClassChannels> z{};
    double zmax = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < kClassChannels; ++k) {
      z[static_cast<size_t>(k)] = cls.v[static_cast<size_t>(k) * ncells + i];
      zmax = std::max(zmax, z[static_cast<size_t>(k)]);
    }
    std::array<double, kClassChannels> p{};
    double sum = 0.0;
    for (int k = 0; k < kClassChannels; ++k) {
      p[static_cast<size_t>(k)] = std::exp(z[static_cast<size_t>(k)] - zmax);
      sum += p[static_cast<size_t>(k)];
    }
    for (int k = 0; k < kClassChannels; ++k) p[static_cast<size_t>(k)] /= sum;

    const int t = targets.cls_map[i];
    const double pt = p[static_cast<size_t>(t)];
    const double alpha_t = t == kBackgroundId ? 1.0 - cfg.focal_alpha : cfg.focal_alpha;
    if (pt <= 1e-9) {
      // flat clamp region: contributes a constant, no gradient
      cls_sum += alpha_t * std::pow(1.0 - 1e-9, cfg.focal_gamma) * -std::log(1e-9);
      continue;
    }
    const double one_m = 1.0 - pt;
    const double focal_pow = std::pow(one_m, cfg.focal_gamma);
    const double logpt = std::log(pt);
    cls_sum += -alpha_t * focal_pow * logpt;
    if (dcls) {
      const double pow_gm1 =
          cfg.focal_gamma > 0.0 ? std::pow(one_m, cfg.focal_gamma - 1.0) : 0.0;
      const double dL_dpt =
          alpha_t * (cfg.focal_gamma * pow_gm1 * logpt - focal_pow / pt);
      const double scale = cfg.w_cls * pos_norm;
      for (int j = 0; j < kClassChannels; ++j) {
        const double delta = j == t ? 1.0 : 0.0;
        const double dpt_dzj = pt * (delta - p[static_cast<size_t>(j)]);
        dcls->v[static_cast<size_t>(j) * ncells + i] += scale * dL_dpt * dpt_dzj;
      }
    }
  }
  bd.cls = cfg.w_cls * cls_sum * pos_norm;

  // regression on positives
  double box_sum = 0.0;
  double traj_sum = 0.0;
  for (const auto& pos : targets.positives) {
    const size_t i = static_cast<size_t>(pos.cell);
    for (int k = 0; k < kBoxChannels; ++k) {
      const double pred = box.v[static_cast<size_t>(k) * ncells + i];
      double g = 0.0;
      box_sum += detail::smooth_l1(pred - pos.box[static_cast<size_t>(k)],
                                   cfg.smooth_l1_beta, &g);
      if (dbox) {
        dbox->v[static_cast<size_t>(k) * ncells + i] += cfg.w_box * pos_norm * g;
      }
    }
    for (int k = 0; k < kTrajChannels; ++k) {
      const double pred = traj.v[static_cast<size_t>(k) * ncells + i];
      double g = 0.0;
      traj_sum += detail::smooth_l1(pred - pos.traj[static_cast<size_t>(k)],
                                    cfg.smooth_l1_beta, &g);
      if (dtraj) {
        dtraj->v[static_cast<size_t>(k) * ncells + i] +=
            cfg.w_traj * pos_norm * kTrajWaypointNorm * g;
      }
    }
  }
  bd.box = cfg.w_box * box_sum * pos_norm;
  bd.traj = cfg.w_traj * traj_sum * pos_norm * kTrajWaypointNorm;
  bd.total = bd.cls + bd.box + bd.traj;
  return bd;
}

/// Test-facing wrapper matching the public contract: dense output + labels.
inline LossBreakdown loss(const DenseOutput& dense,
                          const std::vector<sim::GroundTruthLabel>& labels,
                          const raster::GridSpec& grid, const LossConfig& cfg) {
  const CellTargets targets = encode_targets(labels, grid);
  nn::Buf cls, box, traj;
  detail::tensor_to_buf(dense.cls_logits, cls);
  detail::tensor_to_buf(dense.box, box);
  detail::tensor_to_buf(dense.traj, traj);
  return loss_forward_backward(cls, box, traj, targets, cfg, nullptr, nullptr, nullptr);
}

// ---------------------------------------------------------------------------
// Decoding

/// Per-cell box reconstruction, class-wise greedy NMS, score filtering.
inline std::vector<Detection> decode_detections(const DenseOutput& dense,
                                                const raster::GridSpec& grid,
                                                double score_threshold = 0.05,
                                                double nms_iou = 0.3) {
  const int rows = grid.rows();
  const int cols = grid.cols();
  const size_t ncells = static_cast<size_t>(rows) * cols;

  struct Candidate {
    Detection det;
    size_t cell;
  };
  std::array<std::vector<Candidate>, sim::kNumClasses> per_class;

  for (size_t i = 0; i < ncells; ++i) {
    std::array<double, kClassChannels> z{};
    double zmax = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < kClassChannels; ++k) {
      z[static_cast<size_t>(k)] = dense.cls_logits.raw()[static_cast<size_t>(k) * ncells + i];
      zmax = std::max(zmax, z[static_cast<size_t>(k)]);
    }
    double sum = 0.0;
    for (int k = 0; k < kClassChannels; ++k) {
      z[static_cast<size_t>(k)] = std::exp(z[static_cast<size_t>(k)] - zmax);
      sum += z[static_cast<size_t>(k)];
    }
    for (int cls = 0; cls < sim::kNumClasses; ++cls) {
      const double score = z[static_cast<size_t>(cls)] / sum;
      if (score < score_threshold) continue;
      const int r = static_cast<int>(i) / cols;
      const int c = static_cast<int>(i) % cols;
      const geom::Vec2 cc = grid.cell_center(r, c);
      const auto bv = [&](int k) {
        return dense.box.raw()[static_cast<size_t>(k) * ncells + i];
      };
      Detection det;
      det.cls = static_cast<sim::ActorClass>(cls);
      det.score = score;
      det.box.center = {cc.x + bv(0), cc.y + bv(1)};
      det.box.length = std::exp(std::clamp(bv(2), -4.0, 5.0));
      det.box.width = std::exp(std::clamp(bv(3), -4.0, 5.0));
      const double s2 = bv(4), c2 = bv(5);
      det.box.heading = (s2 == 0.0 && c2 == 0.0) ? 0.0 : 0.5 * std::atan2(s2, c2);
      for (int k = 0; k < sim::kFutureSteps; ++k) {
        det.waypoints[static_cast<size_t>(k)] = {
            det.box.center.x +
                dense.traj.raw()[static_cast<size_t>(2 * k) * ncells + i],
            det.box.center.y +
                dense.traj.raw()[static_cast<size_t>(2 * k + 1) * ncells + i]};
      }
      per_class[static_cast<size_t>(cls)].push_back({det, i});
    }
  }

  std::vector<Detection> out;
  for (auto& cands : per_class) {
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      if (a.det.score != b.det.score) return a.det.score > b.det.score;
      return a.cell < b.cell;
    });
    std::vector<const Candidate*> kept;
    for (const auto& cand : cands) {
      bool suppressed = false;
      for (const Candidate* k : kept) {
        if (metrics::iou(cand.det.box, k->det.box) > nms_iou) {
          suppressed = true;
          break;
        }
      }
      if (!suppressed) kept.push_back(&cand);
    }
    for (const Candidate* k : kept) out.push_back(k->det);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gradient checking

namespace detail {

/// Fingerprint of every piecewise regime the loss passes through: ReLU
/// activation signs plus the quadratic/linear flag of each smooth-L1
/// residual. Two evaluations in the same regime see one smooth function.
inline uint64_t region_signature(const Workspace& ws, const CellTargets& targets,
                                 const LossConfig& cfg) {
  uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix_bit = [&h](bool bit) {
    h ^= bit ? 0x9e3779b9ULL : 0x85ebca6bULL;
    h *= 0x100000001b3ULL;
  };
  const nn::Buf* pres[] = {&ws.cam1_pre, &ws.cam2_pre, &ws.lid1_pre, &ws.e1_pre,
                           &ws.e2_pre,   &ws.e3_pre,   &ws.u1_pre,   &ws.u2_pre,
                           &ws.u3_pre,   &ws.rad1_pre, &ws.rad2_pre, &ws.s1_pre,
                           &ws.s2_pre,   &ws.s3_pre,   &ws.s4_pre,   &ws.bu1_pre,
                           &ws.bu2_pre,  &ws.stem_pre};
  for (const nn::Buf* b : pres) {
    for (double v : b->v) mix_bit(v > 0.0);
  }
  const size_t ncells = ws.cls.plane();
  for (const auto& pos : targets.positives) {
    const size_t i = static_cast<size_t>(pos.cell);
    for (int k = 0; k < kBoxChannels; ++k) {
      mix_bit(std::abs(ws.box.v[static_cast<size_t>(k) * ncells + i] -
                       pos.box[static_cast<size_t>(k)]) < cfg.smooth_l1_beta);
    }
    for (int k = 0; k < kTrajChannels; ++k) {
      mix_bit(std::abs(ws.traj.v[static_cast<size_t>(k) * ncells + i] -
                       pos.traj[static_cast<size_t>(k)]) < cfg.smooth_l1_beta);
    }
  }
  return h;
}

}  // namespace detail

/// Compares analytic gradients against central finite differences
/// (64-bit arithmetic, step 1e-3) on randomly sampled parameters; returns
/// the maximum relative error. Meant for tiny configurations.
///
/// A probe whose +/-step evaluations land in different piecewise regimes
/// (a ReLU or smooth-L1 boundary inside the interval) measures a kink, not
/// the gradient; such samples are rejected via an activation-signature
/// comparison and replaced until `num_samples` valid probes accumulate.
inline double backward_check(Model& model, const ModelInput& input,
                             const std::vector<sim::GroundTruthLabel>& labels,
                             const LossConfig& loss_cfg, int num_samples, Rng& rng,
                             double step = 1e-3) {
  const CellTargets targets = encode_targets(labels, model.grid());
  Workspace ws;
  nn::Buf dcls, dbox, dtraj;

  model.params().zero_grads();
  model.forward(input, ws);
  loss_forward_backward(ws.cls, ws.box, ws.traj, targets, loss_cfg, &dcls, &dbox, &dtraj);
  model.backward(input, ws, dcls, dbox, dtraj);
  const uint64_t sig_center = detail::region_signature(ws, targets, loss_cfg);

  std::vector<double> analytic;
  for (const auto& p : model.params().items()) {
    analytic.insert(analytic.end(), p.grad.begin(), p.grad.end());
  }

  const auto loss_at = [&](uint64_t& sig) {
    Workspace w2;
    model.forward(input, w2);
    const double total = loss_forward_backward(w2.cls, w2.box, w2.traj, targets,
                                               loss_cfg, nullptr, nullptr, nullptr)
                             .total;
    sig = detail::region_signature(w2, targets, loss_cfg);
    return total;
  };

  const size_t total = model.params().total_size();
  double max_rel = 0.0;
  int accepted = 0;
  const int budget = num_samples * 50;
  for (int tries = 0; accepted < num_samples && tries < budget; ++tries) {
    const size_t flat = static_cast<size_t>(rng.next_u64() % total);
    size_t off = flat;
    nn::Param* param = nullptr;
    for (auto& p : model.params().items()) {
      if (off < p.size()) {
        param = &p;
        break;
      }
      off -= p.size();
    }
    const double saved = param->value[off];
    uint64_t sig_p = 0, sig_m = 0;
    param->value[off] = saved + step;
    const double lp = loss_at(sig_p);
    param->value[off] = saved - step;
    const double lm = loss_at(sig_m);
    param->value[off] = saved;
    if (sig_p != sig_center || sig_m != sig_center) continue;  // regime change
    ++accepted;
    const double fd = (lp - lm) / (2.0 * step);
    const double an = analytic[flat];
    const double denom = std::max(std::abs(fd), std::abs(an));
    if (denom < 1e-8) continue;
    max_rel = std::max(max_rel, std::abs(fd - an) / denom);
  }
  if (accepted < num_samples) {
    throw std::runtime_error("backward_check: loss surface too non-smooth to probe");
  }
  return max_rel;
}

// ---------------------------------------------------------------------------
// Training loop

struct TrainConfig {
  int steps = 800;
  int batch_size = 4;
  double lr = 1e-3;
  double lr_min_scale = 0.01;  // cosine decay floor as a fraction of lr
  int val_every = 100;         // 0 disables periodic validation
  int snapshot_every = 100;    // divergence recovery granularity
  uint64_t seed = 1;
  bool deterministic = true;
};

struct TrainLogEntry {
  int step = 0;
  double total = 0.0, cls = 0.0, box = 0.0, traj = 0.0;
  double lr = 0.0;
};

struct TrainLog {
  std::vector<TrainLogEntry> loss_curve;
  std::vector<std::pair<int, double>> val_losses;
  long mask_camera = 0;
  long mask_radar = 0;
  long mask_intensity = 0;
  long examples = 0;
  long camera_pixels_read = 0;
  bool diverged = false;
  int completed_steps = 0;
  // batch losses are noisy; these average the first 5 and last 25 steps
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

struct TrainOptions {
  ArchConfig arch;
  raster::GridSpec grid;
  raster::RvSpec rv_spec;
  TrainConfig train;
  LossConfig loss;
  drop::DropoutConfig dropout;
  drop::ModalityMask forced_mask;  // ablation modes force a modality off
  bool bypass_dropout = false;     // skip mask sampling entirely (diagnostics)
};

struct TrainResult {
  Model model;
  TrainLog log;
};

/// Minibatch Adam with cosine decay. Deterministic given the seed: batch
/// sampling, mask sampling, and parameter init draw from separate derived
/// streams, so a p=0 dropout config trains bit-identically to a pipeline
/// with dropout bypassed.
inline TrainResult train(const std::vector<FrameCache>& cache,
                         const std::vector<CellTargets>& targets,
                         const TrainOptions& opt,
                         const std::vector<FrameCache>* val_cache = nullptr,
                         const std::vector<CellTargets>* val_targets = nullptr) {
  if (cache.empty()) throw std::invalid_argument("train: empty dataset");
  if (cache.size() != targets.size()) {
    throw std::invalid_argument("train: cache/target size mismatch");
  }
  opt.dropout.validate();
  if ((opt.dropout.p_intensity > 0.0 || opt.forced_mask.drop_intensity) &&
      !opt.dropout.sentinel) {
    throw std::invalid_argument("train: intensity dropout requires a sentinel");
  }

  TrainResult result{Model(opt.arch, opt.grid, opt.rv_spec), {}};
  Model& model = result.model;
  TrainLog& log = result.log;

  Rng init_rng = Rng::derive(opt.train.seed, 101);
  Rng batch_rng = Rng::derive(opt.train.seed, 102);
  Rng mask_rng = Rng::derive(opt.train.seed, 103);
  model.init_params(init_rng);

  const int n = static_cast<int>(cache.size());
  nn::AdamConfig adam;
  Workspace ws;
  nn::Buf dcls, dbox, dtraj;
  ForwardStats stats;

  std::vector<double> snapshot = model.params().snapshot_values();

  for (int step = 0; step < opt.train.steps; ++step) {
    const double cosine =
        0.5 * (1.0 + std::cos(geom::kPi * step / std::max(1, opt.train.steps)));
    const double lr =
        opt.train.lr * (opt.train.lr_min_scale + (1.0 - opt.train.lr_min_scale) * cosine);

    model.params().zero_grads();
    LossBreakdown batch_bd;
    bool failed = false;
    for (int b = 0; b < opt.train.batch_size; ++b) {
      const int idx = batch_rng.next_int(0, n - 1);
      drop::ModalityMask mask;
      if (!opt.bypass_dropout) mask = drop::sample_mask(opt.dropout, mask_rng);
      mask = mask | opt.forced_mask;
      log.mask_camera += mask.drop_camera ? 1 : 0;
      log.mask_radar += mask.drop_radar ? 1 : 0;
      log.mask_intensity += mask.drop_intensity ? 1 : 0;
      ++log.examples;

      const ModelInput input =
          build_model_input(cache[static_cast<size_t>(idx)], opt.grid, opt.rv_spec, mask,
                            opt.dropout.camera_kind);
      try {
        model.forward(input, ws, &stats);
      } catch (const std::runtime_error&) {
        failed = true;
        break;
      }
      const LossBreakdown bd = loss_forward_backward(
          ws.cls, ws.box, ws.traj, targets[static_cast<size_t>(idx)], opt.loss, &dcls,
          &dbox, &dtraj);
      if (!std::isfinite(bd.total)) {
        failed = true;
        break;
      }
      batch_bd.total += bd.total;
      batch_bd.cls += bd.cls;
      batch_bd.box += bd.box;
      batch_bd.traj += bd.traj;
      model.backward(input, ws, dcls, dbox, dtraj);
    }

    if (failed || !model.params().grads_finite()) {
      model.params().restore_values(snapshot);
      log.diverged = true;
      break;
    }

    const double inv_b = 1.0 / opt.train.batch_size;
    model.params().scale_grads(inv_b);
    nn::adam_step(model.params(), adam, step + 1, lr);
    log.completed_steps = step + 1;

    TrainLogEntry entry;
    entry.step = step;
    entry.total = batch_bd.total * inv_b;
    entry.cls = batch_bd.cls * inv_b;
    entry.box = batch_bd.box * inv_b;
    entry.traj = batch_bd.traj * inv_b;
    entry.lr = lr;
    log.loss_curve.push_back(entry);

    if (opt.train.snapshot_every > 0 && (step + 1) % opt.train.snapshot_every == 0) {
      snapshot = model.params().snapshot_values();
    }

    if (opt.train.val_every > 0 && val_cache && val_targets && !val_cache->empty() &&
        (step + 1) % opt.train.val_every == 0) {
      double vsum = 0.0;
      const size_t vn = std::min<size_t>(val_cache->size(), 16);
      for (size_t vi = 0; vi < vn; ++vi) {
        const ModelInput input = build_model_input((*val_cache)[vi], opt.grid,
                                                   opt.rv_spec, opt.forced_mask,
                                                   opt.dropout.camera_kind);
        Workspace vws;
        model.forward(input, vws);
        vsum += loss_forward_backward(vws.cls, vws.box, vws.traj, (*val_targets)[vi],
                                      opt.loss, nullptr, nullptr, nullptr)
                    .total;
      }
      log.val_losses.emplace_back(step + 1, vsum / static_cast<double>(vn));
    }
  }

  log.camera_pixels_read = stats.camera_pixels_read;
  const auto window_mean = [&](size_t begin, size_t end) {
    double sum = 0.0;
    for (size_t i = begin; i < end; ++i) sum += log.loss_curve[i].total;
    return end > begin ? sum / static_cast<double>(end - begin) : 0.0;
  };
  if (!log.loss_curve.empty()) {
    const size_t n = log.loss_curve.size();
    log.initial_loss = window_mean(0, std::min<size_t>(5, n));
    log.final_loss = window_mean(n - std::min<size_t>(25, n), n);
  }
  return result;
}

}  // namespace msd::net

#endif  // MSD_TRAINING_HPP
