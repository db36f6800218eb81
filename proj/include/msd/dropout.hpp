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

#ifndef MSD_DROPOUT_HPP
#define MSD_DROPOUT_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "msd/rng.hpp"
#include "msd/tensor.hpp"
#include "msd/worldsim.hpp"

namespace msd::drop {

/// Camera dropout variant: zero the final pre-fusion feature tensor, or zero
/// the raw input pixels and let the camera network run on the blank image.
enum class CameraDropKind { kFeature, kInput };

struct DropoutConfig {
  double p_camera = 0.2;
  double p_radar = 0.2;
  double p_intensity = 0.1;
  CameraDropKind camera_kind = CameraDropKind::kFeature;
  std::optional<double> sentinel;  // mean training intensity, set by prepass

  void validate() const {
    const auto ok = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!ok(p_camera) || !ok(p_radar) || !ok(p_intensity)) {
      throw std::invalid_argument("DropoutConfig: probabilities must be in [0,1]");
    }
    if (sentinel && (*sentinel < 0.0 || *sentinel > 1.0)) {
      throw std::invalid_argument("DropoutConfig: sentinel must be in [0,1]");
    }
  }
};

struct ModalityMask {
  bool drop_camera = false;
  bool drop_radar = false;
  bool drop_intensity = false;

  bool any() const { return drop_camera || drop_radar || drop_intensity; }

  ModalityMask operator|(const ModalityMask& o) const {
    return {drop_camera || o.drop_camera, drop_radar || o.drop_radar,
            drop_intensity || o.drop_intensity};
  }
  bool operator==(const ModalityMask&) const = default;
};

enum class EvalMode { kFull = 0, kMinusCamera, kMinusRadar, kMinusIntensity };

inline const char* to_string(EvalMode m) {
  switch (m) {
    case EvalMode::kFull: return "Full";
    case EvalMode::kMinusCamera: return "-Camera";
    case EvalMode::kMinusRadar: return "-Radar";
    case EvalMode::kMinusIntensity: return "-Intensity";
  }
  return "?";
}

inline EvalMode eval_mode_from_string(const std::string& s) {
  if (s == "Full" || s == "full") return EvalMode::kFull;
  if (s == "-Camera" || s == "-camera") return EvalMode::kMinusCamera;
  if (s == "-Radar" || s == "-radar") return EvalMode::kMinusRadar;
  if (s == "-Intensity" || s == "-intensity") return EvalMode::kMinusIntensity;
  throw std::invalid_argument("unknown eval mode: " + s);
}

/// Mean LiDAR intensity over every point of every sweep in the training
/// split. Deterministic single pass.
inline double compute_sentinel(const std::vector<sim::SensorFrame>& training_frames) {
  double sum = 0.0;
  long long count = 0;
  for (const auto& frame : training_frames) {
    for (const auto& sweep : frame.lidar_sweeps) {
      for (const auto& p : sweep.points) {
        sum += p.intensity;
        ++count;
      }
    }
  }
  if (count == 0) {
    throw std::invalid_argument("compute_sentinel: dataset has no LiDAR points");
  }
  return sum / static_cast<double>(count);
}

/// Three independent Bernoulli draws, in (camera, radar, intensity) order.
inline ModalityMask sample_mask(const DropoutConfig& cfg, Rng& rng) {
  cfg.validate();
  ModalityMask mask;
  mask.drop_camera = rng.next_bernoulli(cfg.p_camera);
  mask.drop_radar = rng.next_bernoulli(cfg.p_radar);
  mask.drop_intensity = rng.next_bernoulli(cfg.p_intensity);
  return mask;
}

/// Deterministic degraded-evaluation masks; consumes no randomness.
inline ModalityMask mask_for_eval(EvalMode mode) {
  switch (mode) {
    case EvalMode::kFull: return {false, false, false};
    case EvalMode::kMinusCamera: return {true, false, false};
    case EvalMode::kMinusRadar: return {false, true, false};
    case EvalMode::kMinusIntensity: return {false, false, true};
  }
  return {};
}

/// Zeroes the dropped modality's final pre-fusion feature tensor; undropped
/// tensors pass through unchanged.
inline std::pair<Tensor, Tensor> apply_feature_dropout(Tensor camera_feature,
                                                       Tensor radar_feature,
                                                       const ModalityMask& mask) {
  if (mask.drop_camera) camera_feature.fill(0.0);
  if (mask.drop_radar) radar_feature.fill(0.0);
  return {std::move(camera_feature), std::move(radar_feature)};
}

/// Input-dropout variant for camera: blanks the raw pixels.
inline sim::CameraImage apply_input_dropout(sim::CameraImage camera,
                                            const ModalityMask& mask) {
  if (mask.drop_camera) {
    for (auto& px : camera.pixels) px = {0.0, 0.0, 0.0};
  }
  return camera;
}

/// Replaces every point intensity with the sentinel; positions untouched.
inline std::vector<sim::LidarSweep> apply_intensity_dropout(
    std::vector<sim::LidarSweep> sweeps, const ModalityMask& mask, double sentinel) {
  if (mask.drop_intensity) {
    for (auto& sweep : sweeps) {
      for (auto& p : sweep.points) p.intensity = sentinel;
    }
  }
  return sweeps;
}

}  // namespace msd::drop

#endif  // MSD_DROPOUT_HPP
