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

#ifndef MSD_PIPELINE_HPP
#define MSD_PIPELINE_HPP

#include <vector>

#include "msd/dropout.hpp"
#include "msd/fusionnet.hpp"
#include "msd/raster.hpp"
#include "msd/worldsim.hpp"

namespace msd::net {

/// Mask-independent tensors cached per frame. BEV/RV variants exist for
/// both intensity states because the sentinel fill touches every cell.
struct FrameCache {
  Tensor bev_plain, bev_dropped;
  Tensor rv_plain, rv_dropped;
  Tensor camera;  // aligned to RV bins, validity channel included
  Tensor radar;
  Tensor map;
};

inline FrameCache build_frame_cache(const sim::SensorFrame& frame,
                                    const raster::GridSpec& grid,
                                    const raster::RvSpec& rv_spec, double sentinel) {
  FrameCache cache;
  cache.bev_plain = raster::voxelize_bev(frame.lidar_sweeps, grid, false, sentinel);
  cache.bev_dropped = raster::voxelize_bev(frame.lidar_sweeps, grid, true, sentinel);
  cache.rv_plain = raster::rasterize_rv(frame.lidar_sweeps.back(), rv_spec, false, sentinel);
  cache.rv_dropped = raster::rasterize_rv(frame.lidar_sweeps.back(), rv_spec, true, sentinel);
  cache.camera = raster::align_camera_to_rv(frame.camera, rv_spec);
  cache.radar = raster::rasterize_radar(frame.radar_sweeps, grid);
  cache.map = raster::rasterize_map(frame.map, grid);
  return cache;
}

inline std::vector<FrameCache> build_dataset_cache(
    const std::vector<sim::SensorFrame>& frames, const raster::GridSpec& grid,
    const raster::RvSpec& rv_spec, double sentinel) {
  std::vector<FrameCache> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(build_frame_cache(f, grid, rv_spec, sentinel));
  return out;
}

/// Assembles a ModelInput with the mask applied to the inputs: intensity
/// dropout selects the sentinel-filled raster variants, input-kind camera
/// dropout blanks the camera colors (validity untouched). Feature-kind
/// camera/radar dropout is applied inside Model::forward.
inline ModelInput build_model_input(const FrameCache& cache,
                                    const raster::GridSpec& grid,
                                    const raster::RvSpec& rv_spec,
                                    const drop::ModalityMask& mask,
                                    drop::CameraDropKind camera_kind) {
  ModelInput in;
  in.grid = grid;
  in.rv_spec = rv_spec;
  in.mask = mask;
  in.camera_kind = camera_kind;
  in.bev = mask.drop_intensity ? cache.bev_dropped : cache.bev_plain;
  in.rv = mask.drop_intensity ? cache.rv_dropped : cache.rv_plain;
  in.radar = cache.radar;
  in.map = cache.map;
  in.camera = cache.camera;
  if (mask.drop_camera && camera_kind == drop::CameraDropKind::kInput) {
    for (int ch = 0; ch < 3; ++ch) in.camera.fill_channel(ch, 0.0);
  }
  return in;
}

/// Convenience path used by tests: builds the cache and the input for a
/// single frame in one call.
inline ModelInput build_model_input(const sim::SensorFrame& frame,
                                    const raster::GridSpec& grid,
                                    const raster::RvSpec& rv_spec,
                                    const drop::ModalityMask& mask,
                                    drop::CameraDropKind camera_kind, double sentinel) {
  sim::SensorFrame adjusted = frame;
  if (mask.drop_camera && camera_kind == drop::CameraDropKind::kInput) {
    adjusted.camera = drop::apply_input_dropout(adjusted.camera, mask);
  }
  const FrameCache cache = build_frame_cache(adjusted, grid, rv_spec, sentinel);
  ModelInput in;
  in.grid = grid;
  in.rv_spec = rv_spec;
  in.mask = mask;
  in.camera_kind = camera_kind;
  in.bev = mask.drop_intensity ? cache.bev_dropped : cache.bev_plain;
  in.rv = mask.drop_intensity ? cache.rv_dropped : cache.rv_plain;
  in.radar = cache.radar;
  in.map = cache.map;
  in.camera = cache.camera;
  return in;
}

}  // namespace msd::net

#endif  // MSD_PIPELINE_HPP
