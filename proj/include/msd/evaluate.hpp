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

#ifndef MSD_EVALUATE_HPP
#define MSD_EVALUATE_HPP

#include <vector>

#include "msd/metrics.hpp"
#include "msd/pipeline.hpp"
#include "msd/training.hpp"

namespace msd::metrics {

struct EvalOptions {
  MetricConfig metric;
  drop::CameraDropKind camera_kind = drop::CameraDropKind::kFeature;
  // ablation checkpoints carry a permanently-dropped modality; the eval
  // mask is the union of that and the requested eval mode
  drop::ModalityMask forced_mask;
};

/// Runs the model over every frame with the deterministic degraded-eval mask
/// applied, pools detections and labels, and reports per-class AP (full and
/// FOV-restricted) plus DE at the recall operating point.
inline MetricsReport evaluate(const net::Model& model,
                              const std::vector<sim::SensorFrame>& frames,
                              const std::vector<net::FrameCache>& cache,
                              drop::EvalMode mode, const EvalOptions& opt) {
  if (frames.size() != cache.size()) {
    throw std::invalid_argument("evaluate: frames/cache size mismatch");
  }
  const drop::ModalityMask mask = drop::mask_for_eval(mode) | opt.forced_mask;

  std::vector<PooledDetection> dets;
  std::vector<PooledLabel> labels;
  net::Workspace ws;
  for (size_t fi = 0; fi < frames.size(); ++fi) {
    const net::ModelInput input = net::build_model_input(
        cache[fi], model.grid(), model.rv_spec(), mask, opt.camera_kind);
    model.forward(input, ws);
    const net::DenseOutput dense = model.dense_output(ws);
    const std::vector<Detection> frame_dets = net::decode_detections(
        dense, model.grid(), opt.metric.score_threshold, opt.metric.nms_iou);
    for (const auto& d : frame_dets) dets.push_back({static_cast<int>(fi), d});
    for (const auto& l : frames[fi].labels) labels.push_back({static_cast<int>(fi), l});
  }
  return compute_report(dets, labels, opt.metric, static_cast<long>(frames.size()), mode);
}

}  // namespace msd::metrics

#endif  // MSD_EVALUATE_HPP
