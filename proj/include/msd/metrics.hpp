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

#ifndef MSD_METRICS_HPP
#define MSD_METRICS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "msd/dropout.hpp"
#include "msd/geometry.hpp"
#include "msd/worldsim.hpp"

namespace msd::metrics {

/// Scored oriented box plus the 30-waypoint motion prediction.
struct Detection {
  sim::ActorClass cls = sim::ActorClass::kVehicle;
  double score = 0.0;  // [0,1]
  geom::OrientedBox box;
  std::array<geom::Vec2, sim::kFutureSteps> waypoints{};
};

struct MetricConfig {
  // class-specific IoU thresholds: vehicle, pedestrian, bicyclist
  std::array<double, 3> iou_thresholds{0.7, 0.1, 0.3};
  double de_horizon_s = 3.0;
  double de_recall = 0.8;
  double fov_min = -geom::kPi / 4.0;
  double fov_max = geom::kPi / 4.0;
  // decode operating parameters used by evaluate()
  double score_threshold = 0.05;
  double nms_iou = 0.3;
};

/// Intersection-over-union of two oriented rectangles via convex polygon
/// clipping. Symmetric; a rectangle is invariant under a pi rotation, so
/// headings act modulo pi.
inline double iou(const geom::OrientedBox& a, const geom::OrientedBox& b) {
  if (!(a.area() > 0.0) || !(b.area() > 0.0) || !std::isfinite(a.area()) ||
      !std::isfinite(b.area())) {
    throw std::invalid_argument("iou: degenerate box");
  }
  const double inter = geom::intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

/// Detection/label records pooled over an evaluation set; matching is
/// restricted to records from the same frame.
struct PooledDetection {
  int frame = 0;
  Detection det;
};

struct PooledLabel {
  int frame = 0;
  sim::GroundTruthLabel label;
};

struct MatchResult {
  std::vector<std::pair<int, int>> tp_pairs;  // (detection idx, label idx)
  std::vector<int> fp;                        // unmatched detection indices
  std::vector<int> fn;                        // unmatched label indices
};

namespace detail {

/// Detection indices in descending score order; ties broken by frame then
/// insertion index for determinism.
inline std::vector<int> score_order(const std::vector<PooledDetection>& dets) {
  std::vector<int> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    const auto& a = dets[static_cast<size_t>(i)];
    const auto& b = dets[static_cast<size_t>(j)];
    if (a.det.score != b.det.score) return a.det.score > b.det.score;
    if (a.frame != b.frame) return a.frame < b.frame;
    return i < j;
  });
  return order;
}

}  // namespace detail

/// Greedy score-ordered one-to-one matching: each detection takes the
/// highest-IoU still-unmatched label from its frame with IoU >= threshold.
inline MatchResult match(const std::vector<PooledDetection>& dets,
                         const std::vector<PooledLabel>& labels,
                         double iou_threshold) {
  MatchResult result;
  std::vector<bool> label_used(labels.size(), false);
  const std::vector<int> order = detail::score_order(dets);
  for (int di : order) {
    const auto& d = dets[static_cast<size_t>(di)];
    int best = -1;
    double best_iou = 0.0;
    for (size_t li = 0; li < labels.size(); ++li) {
      if (label_used[li] || labels[li].frame != d.frame) continue;
      const double v = iou(d.det.box, labels[li].label.box);
      if (v >= iou_threshold && (best < 0 || v > best_iou)) {
        best = static_cast<int>(li);
        best_iou = v;
      }
    }
    if (best >= 0) {
      label_used[static_cast<size_t>(best)] = true;
      result.tp_pairs.emplace_back(di, best);
    } else {
      result.fp.push_back(di);
    }
  }
  for (size_t li = 0; li < labels.size(); ++li) {
    if (!label_used[li]) result.fn.push_back(static_cast<int>(li));
  }
  return result;
}

/// Area under the precision-recall curve with all-point interpolation
/// (precision envelope). Returns nullopt when there are no labels: AP is
/// undefined there, never zero.
inline std::optional<double> average_precision(const std::vector<PooledDetection>& dets,
                                               const std::vector<PooledLabel>& labels,
                                               double iou_threshold) {
  if (labels.empty()) return std::nullopt;
  if (dets.empty()) return 0.0;

  const std::vector<int> order = detail::score_order(dets);
  std::vector<bool> label_used(labels.size(), false);
  std::vector<char> is_tp(order.size(), 0);
  for (size_t rank = 0; rank < order.size(); ++rank) {
    const auto& d = dets[static_cast<size_t>(order[rank])];
    int best = -1;
    double best_iou = iou_threshold;
    for (size_t li = 0; li < labels.size(); ++li) {
      if (label_used[li] || labels[li].frame != d.frame) continue;
      const double v = iou(d.det.box, labels[li].label.box);
      if (v >= iou_threshold && (best < 0 || v > best_iou)) {
        best = static_cast<int>(li);
        best_iou = v;
      }
    }
    if (best >= 0) {
      label_used[static_cast<size_t>(best)] = true;
      is_tp[rank] = 1;
    }
  }

  const double nl = static_cast<double>(labels.size());
  std::vector<double> recall(order.size()), precision(order.size());
  double tp = 0.0;
  for (size_t k = 0; k < order.size(); ++k) {
    tp += is_tp[k];
    recall[k] = tp / nl;
    precision[k] = tp / static_cast<double>(k + 1);
  }
  // precision envelope, integrated over recall
  double ap = 0.0;
  double env = 0.0;
  for (size_t k = order.size(); k-- > 0;) {
    env = std::max(env, precision[k]);
    const double r_prev = k == 0 ? 0.0 : recall[k - 1];
    ap += env * (recall[k] - r_prev);
  }
  return ap;
}

struct DeResult {
  std::optional<double> de_cm;
  double score_threshold = 0.0;
  bool recall_reached = false;
  double achieved_recall = 0.0;
};

/// Displacement error at the recall operating point: lowers the score
/// threshold just far enough that the matched set reaches the target recall,
/// then averages the final-waypoint position error over those true
/// positives. Detections below the operating threshold cannot affect the
/// result. If the recall is unreachable the maximum-recall set is used and
/// the report is flagged.
inline DeResult displacement_error(const std::vector<PooledDetection>& dets,
                                   const std::vector<PooledLabel>& labels,
                                   double iou_threshold, double target_recall = 0.8,
                                   int horizon_index = sim::kFutureSteps - 1) {
  DeResult result;
  if (labels.empty() || dets.empty()) return result;

  const std::vector<int> order = detail::score_order(dets);
  std::vector<bool> label_used(labels.size(), false);
  std::vector<int> match_of(order.size(), -1);
  for (size_t rank = 0; rank < order.size(); ++rank) {
    const auto& d = dets[static_cast<size_t>(order[rank])];
    int best = -1;
    double best_iou = iou_threshold;
    for (size_t li = 0; li < labels.size(); ++li) {
      if (label_used[li] || labels[li].frame != d.frame) continue;
      const double v = iou(d.det.box, labels[li].label.box);
      if (v >= iou_threshold && (best < 0 || v > best_iou)) {
        best = static_cast<int>(li);
        best_iou = v;
      }
    }
    if (best >= 0) {
      label_used[static_cast<size_t>(best)] = true;
      match_of[rank] = best;
    }
  }

  const double nl = static_cast<double>(labels.size());
  size_t cut = order.size();  // prefix length at the operating point
  double tp = 0.0;
  double max_recall = 0.0;
  size_t max_recall_cut = order.size();
  for (size_t k = 0; k < order.size(); ++k) {
    if (match_of[k] >= 0) tp += 1.0;
    const double r = tp / nl;
    if (r > max_recall) {
      max_recall = r;
      max_recall_cut = k + 1;
    }
    if (r >= target_recall) {
      cut = k + 1;
      result.recall_reached = true;
      break;
    }
  }
  if (!result.recall_reached) cut = max_recall_cut;
  result.achieved_recall = std::min(max_recall, target_recall);
  if (result.recall_reached) {
    double tp2 = 0.0;
    for (size_t k = 0; k < cut; ++k) tp2 += match_of[k] >= 0 ? 1.0 : 0.0;
    result.achieved_recall = tp2 / nl;
  }
  result.score_threshold =
      cut > 0 ? dets[static_cast<size_t>(order[cut - 1])].det.score : 1.0;

  double err_sum = 0.0;
  long count = 0;
  for (size_t k = 0; k < cut; ++k) {
    if (match_of[k] < 0) continue;
    const auto& d = dets[static_cast<size_t>(order[k])].det;
    const auto& lab = labels[static_cast<size_t>(match_of[k])].label;
    const geom::Vec2 pred = d.waypoints[static_cast<size_t>(horizon_index)];
    const geom::Vec2 truth = lab.future[static_cast<size_t>(horizon_index)];
    err_sum += (pred - truth).norm();
    ++count;
  }
  if (count > 0) result.de_cm = 100.0 * err_sum / static_cast<double>(count);
  return result;
}

/// FOV membership: [fov_min, fov_max) on the box-center azimuth, matching
/// the label generator's convention. Labels additionally carry a precomputed
/// in_fov flag which is authoritative for them.
inline std::vector<PooledLabel> filter_fov(const std::vector<PooledLabel>& labels,
                                           double fov_min, double fov_max) {
  (void)fov_min;
  (void)fov_max;
  std::vector<PooledLabel> out;
  for (const auto& l : labels) {
    if (l.label.in_fov) out.push_back(l);
  }
  return out;
}

inline std::vector<PooledDetection> filter_fov(const std::vector<PooledDetection>& dets,
                                               double fov_min, double fov_max) {
  std::vector<PooledDetection> out;
  for (const auto& d : dets) {
    const double az = std::atan2(d.det.box.center.y, d.det.box.center.x);
    if (az >= fov_min && az < fov_max) out.push_back(d);
  }
  return out;
}

struct ClassReport {
  std::optional<double> ap_full;  // [0,1]
  std::optional<double> ap_fov;
  std::optional<double> de_cm;
  long labels = 0;
  long labels_fov = 0;
  long detections = 0;
  double de_threshold = 0.0;
  bool de_recall_reached = false;
};

struct MetricsReport {
  drop::EvalMode mode = drop::EvalMode::kFull;
  std::array<ClassReport, sim::kNumClasses> per_class{};
  long frames = 0;
  long detections = 0;
  long labels = 0;
  std::string interpolation = "all-point";
};

/// Computes per-class AP (full + FOV-restricted) and DE from pooled records.
inline MetricsReport compute_report(const std::vector<PooledDetection>& dets,
                                    const std::vector<PooledLabel>& labels,
                                    const MetricConfig& cfg, long frames,
                                    drop::EvalMode mode) {
  MetricsReport report;
  report.mode = mode;
  report.frames = frames;
  report.detections = static_cast<long>(dets.size());
  report.labels = static_cast<long>(labels.size());
  for (int k = 0; k < sim::kNumClasses; ++k) {
    std::vector<PooledDetection> dk;
    std::vector<PooledLabel> lk;
    for (const auto& d : dets) {
      if (static_cast<int>(d.det.cls) == k) dk.push_back(d);
    }
    for (const auto& l : labels) {
      if (static_cast<int>(l.label.cls) == k) lk.push_back(l);
    }
    ClassReport& cr = report.per_class[static_cast<size_t>(k)];
    cr.labels = static_cast<long>(lk.size());
    cr.detections = static_cast<long>(dk.size());
    const double thr = cfg.iou_thresholds[static_cast<size_t>(k)];
    cr.ap_full = average_precision(dk, lk, thr);
    const auto dk_fov = filter_fov(dk, cfg.fov_min, cfg.fov_max);
    const auto lk_fov = filter_fov(lk, cfg.fov_min, cfg.fov_max);
    cr.labels_fov = static_cast<long>(lk_fov.size());
    cr.ap_fov = average_precision(dk_fov, lk_fov, thr);
    const DeResult de = displacement_error(dk, lk, thr, cfg.de_recall);
    cr.de_cm = de.de_cm;
    cr.de_threshold = de.score_threshold;
    cr.de_recall_reached = de.recall_reached;
  }
  return report;
}

}  // namespace msd::metrics

#endif  // MSD_METRICS_HPP
