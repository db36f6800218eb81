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

#ifndef MSD_FUSIONNET_HPP
#define MSD_FUSIONNET_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "msd/dropout.hpp"
#include "msd/metrics.hpp"
#include "msd/nn.hpp"
#include "msd/raster.hpp"
#include "msd/rng.hpp"
#include "msd/tensor.hpp"
#include "msd/worldsim.hpp"

namespace msd::net {

using metrics::Detection;

constexpr int kClassChannels = sim::kNumClasses + 1;  // + background
constexpr int kBackgroundId = sim::kNumClasses;
constexpr int kBoxChannels = 6;  // dx dy log_l log_w sin2h cos2h
constexpr int kTrajChannels = 2 * sim::kFutureSteps;
constexpr int kBevLidarChannels = sim::kLidarHistory + 1;
constexpr int kMapChannels = 2;
constexpr int kCameraChannels = 4;
constexpr int kRadarChannels = sim::kRadarHistory * raster::kRadarChannelsPerSweep;

/// Desk-scale multi-view architecture: an azimuth U-Net fusing camera and
/// LiDAR range-view features, a 2-stage radar extractor, and a BEV trunk
/// that fuses the voxel grid with map channels, radar features and the
/// projected RV features after its first stage.
struct ArchConfig {
  int rv_width = 16;
  int radar_width = 16;
  int bev_width = 32;
  bool heads_only = false;  // degenerate linear heads on the raw BEV input
  double projection_margin_m = 2.0;
};

struct ModelInput {
  Tensor bev;     // kBevLidarChannels x rows x cols
  Tensor rv;      // kRvChannels x bins
  Tensor camera;  // kCameraChannels x bins
  Tensor radar;   // kRadarChannels x rows x cols
  Tensor map;     // kMapChannels x rows x cols
  drop::ModalityMask mask;
  drop::CameraDropKind camera_kind = drop::CameraDropKind::kFeature;
  raster::GridSpec grid;
  raster::RvSpec rv_spec;
};

struct DenseOutput {
  Tensor cls_logits;  // kClassChannels x rows x cols
  Tensor box;         // kBoxChannels x rows x cols
  Tensor traj;        // kTrajChannels x rows x cols
};

struct ForwardStats {
  long camera_pixels_read = 0;
};

/// Activation cache for one forward pass; reused across steps.
struct Workspace {
  // RV branch
  nn::Buf cam_in, cam1_pre, cam1, cam2_pre, cam_feat;
  nn::Buf lid_in, lid1_pre, lid_feat;
  nn::Buf x0;
  nn::Buf e1_pre, e1, e2_pre, e2, e3_pre, e3;
  nn::Buf u1_up, u1_cat, u1_pre, u1;
  nn::Buf u2_up, u2_cat, u2_pre, u2;
  nn::Buf u3_up, u3_cat, u3_pre, rv_feat;
  // radar branch
  nn::Buf radar_in, rad1_pre, rad1, rad2_pre, radar_feat;
  // BEV trunk
  nn::Buf bev_in;
  nn::Buf s1_pre, s1;
  nn::Buf rv_proj;
  nn::Buf fuse;
  nn::Buf s2_pre, s2, s3_pre, s3, s4_pre, s4;
  nn::Buf bu1_up, bu1_cat, bu1_pre, bu1, bu2_up, bu2_cat, bu2_pre, bu2;
  nn::Buf stem_pre, stem;
  nn::Buf cls, box, traj;
  raster::RvProjection proj;
  bool camera_branch_ran = false;
  bool radar_branch_ran = false;
};

namespace detail {

inline void tensor_to_buf(const Tensor& t, nn::Buf& b) {
  if (t.shape().size() == 3) {
    b.resize(t.dim(0), t.dim(1), t.dim(2));
  } else {
    b.resize(t.dim(0), t.dim(1), 1);
  }
  std::copy(t.raw().begin(), t.raw().end(), b.v.begin());
}

// Fixed input conditioning: counts are compressed with log1p and metric
// ranges/velocities scaled to O(1). Constant transforms, so they carry no
// gradient and leave the dropped-modality invariances intact.
inline void normalize_bev(nn::Buf& bev) {
  const size_t plane = bev.plane();
  for (int ch = 0; ch < sim::kLidarHistory; ++ch) {
    double* p = bev.ch(ch);
    for (size_t i = 0; i < plane; ++i) p[i] = std::log1p(p[i]);
  }
}

inline void normalize_rv(nn::Buf& rv) {
  double* range = rv.ch(raster::kRvRange);
  for (int i = 0; i < rv.h; ++i) range[i] *= 0.1;
}

inline void normalize_radar(nn::Buf& radar) {
  const size_t plane = radar.plane();
  for (int s = 0; s < sim::kRadarHistory; ++s) {
    double* count = radar.ch(s * raster::kRadarChannelsPerSweep);
    for (size_t i = 0; i < plane; ++i) count[i] = std::log1p(count[i]);
    for (int ch = 1; ch <= 2; ++ch) {
      double* rv = radar.ch(s * raster::kRadarChannelsPerSweep + ch);
      for (size_t i = 0; i < plane; ++i) rv[i] *= 0.1;
    }
  }
}

inline Tensor buf_to_tensor(const nn::Buf& b, std::vector<ChannelInfo> legend = {}) {
  Tensor t = b.w == 1 && legend.empty()
                 ? Tensor({b.c, b.h, b.w})
                 : Tensor({b.c, b.h, b.w}, std::move(legend));
  std::copy(b.v.begin(), b.v.end(), t.raw().begin());
  return t;
}

}  // namespace detail

class Model {
 public:
  Model(ArchConfig arch, raster::GridSpec grid, raster::RvSpec rv_spec)
      : arch_(arch), grid_(grid), rv_spec_(rv_spec) {
    grid_.validate();
    register_params();
  }

  const ArchConfig& arch() const { return arch_; }
  const raster::GridSpec& grid() const { return grid_; }
  const raster::RvSpec& rv_spec() const { return rv_spec_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  void init_params(Rng& rng) {
    for (auto& p : params_.items()) {
      const bool is_bias = p.shape.size() == 1;
      if (is_bias) {
        std::fill(p.value.begin(), p.value.end(), 0.0);
        continue;
      }
      // shape = {cout, cin, k}; He initialization
      size_t fan_in = 1;
      for (size_t i = 1; i < p.shape.size(); ++i) {
        fan_in *= static_cast<size_t>(p.shape[i]);
      }
      double std = std::sqrt(2.0 / static_cast<double>(fan_in));
      if (p.name.rfind("head.", 0) == 0) std *= 0.1;
      for (double& v : p.value) v = rng.next_gaussian(0.0, std);
    }
    // bias foreground logits low so early scores favor background
    auto& cls_b = params_.get("head.cls.b");
    for (int k = 0; k < sim::kNumClasses; ++k) cls_b.value[static_cast<size_t>(k)] = -3.5;
  }

  /// Deterministic and pure given (params, input). Applies feature dropout
  /// to the camera and radar branch outputs per the input mask; dropped
  /// branches are skipped entirely (their inputs are never read), which is
  /// exactly equivalent to zeroing their final feature tensors.
  void forward(const ModelInput& in, Workspace& ws, ForwardStats* stats = nullptr) const {
    check_input(in);
    const int rows = grid_.rows();
    const int cols = grid_.cols();
    const int bins = rv_spec_.azimuth_bins;

    if (arch_.heads_only) {
      detail::tensor_to_buf(in.bev, ws.bev_in);
      detail::normalize_bev(ws.bev_in);
      nn::Buf map_buf;
      detail::tensor_to_buf(in.map, map_buf);
      nn::concat_forward({&ws.bev_in, &map_buf}, ws.bu2);
      run_heads(ws.bu2, ws);
      check_heads_finite(ws);
      return;
    }

    // ---- RV branch -------------------------------------------------------
    const bool camera_active =
        !(in.mask.drop_camera && in.camera_kind == drop::CameraDropKind::kFeature);
    ws.camera_branch_ran = camera_active;
    if (camera_active) {
      detail::tensor_to_buf(in.camera, ws.cam_in);
      if (stats) stats->camera_pixels_read += static_cast<long>(in.camera.size());
      nn::conv1d_circ_forward(ws.cam_in, params_.get("rv.cam1.w"),
                              params_.get("rv.cam1.b"), 1, ws.cam1_pre);
      nn::relu_forward(ws.cam1_pre, ws.cam1);
      nn::conv1d_circ_forward(ws.cam1, params_.get("rv.cam2.w"),
                              params_.get("rv.cam2.b"), 1, ws.cam2_pre);
      nn::relu_forward(ws.cam2_pre, ws.cam_feat);
    } else {
      ws.cam_feat.resize(arch_.rv_width, bins, 1);  // zeroed feature tensor
    }

    detail::tensor_to_buf(in.rv, ws.lid_in);
    detail::normalize_rv(ws.lid_in);
    nn::conv1d_circ_forward(ws.lid_in, params_.get("rv.lid1.w"),
                            params_.get("rv.lid1.b"), 1, ws.lid1_pre);
    nn::relu_forward(ws.lid1_pre, ws.lid_feat);

    nn::concat_forward({&ws.lid_feat, &ws.cam_feat}, ws.x0);

    nn::conv1d_circ_forward(ws.x0, params_.get("rv.e1.w"), params_.get("rv.e1.b"), 2,
                            ws.e1_pre);
    nn::relu_forward(ws.e1_pre, ws.e1);
    nn::conv1d_circ_forward(ws.e1, params_.get("rv.e2.w"), params_.get("rv.e2.b"), 2,
                            ws.e2_pre);
    nn::relu_forward(ws.e2_pre, ws.e2);
    nn::conv1d_circ_forward(ws.e2, params_.get("rv.e3.w"), params_.get("rv.e3.b"), 2,
                            ws.e3_pre);
    nn::relu_forward(ws.e3_pre, ws.e3);

    nn::upsample1d_forward(ws.e3, ws.e2.h, ws.u1_up);
    nn::concat_forward({&ws.u1_up, &ws.e2}, ws.u1_cat);
    nn::conv1d_circ_forward(ws.u1_cat, params_.get("rv.u1.w"), params_.get("rv.u1.b"), 1,
                            ws.u1_pre);
    nn::relu_forward(ws.u1_pre, ws.u1);

    nn::upsample1d_forward(ws.u1, ws.e1.h, ws.u2_up);
    nn::concat_forward({&ws.u2_up, &ws.e1}, ws.u2_cat);
    nn::conv1d_circ_forward(ws.u2_cat, params_.get("rv.u2.w"), params_.get("rv.u2.b"), 1,
                            ws.u2_pre);
    nn::relu_forward(ws.u2_pre, ws.u2);

    nn::upsample1d_forward(ws.u2, bins, ws.u3_up);
    nn::concat_forward({&ws.u3_up, &ws.x0}, ws.u3_cat);
    nn::conv1d_circ_forward(ws.u3_cat, params_.get("rv.u3.w"), params_.get("rv.u3.b"), 1,
                            ws.u3_pre);
    nn::relu_forward(ws.u3_pre, ws.rv_feat);

    // ---- radar branch ----------------------------------------------------
    const bool radar_active = !in.mask.drop_radar;
    ws.radar_branch_ran = radar_active;
    if (radar_active) {
      detail::tensor_to_buf(in.radar, ws.radar_in);
      detail::normalize_radar(ws.radar_in);
      nn::conv2d_forward(ws.radar_in, params_.get("radar.c1.w"), params_.get("radar.c1.b"),
                         1, ws.rad1_pre);
      nn::relu_forward(ws.rad1_pre, ws.rad1);
      nn::conv2d_forward(ws.rad1, params_.get("radar.c2.w"), params_.get("radar.c2.b"), 1,
                         ws.rad2_pre);
      nn::relu_forward(ws.rad2_pre, ws.radar_feat);
    } else {
      ws.radar_feat.resize(arch_.radar_width, rows, cols);
    }

    // ---- BEV trunk -------------------------------------------------------
    detail::tensor_to_buf(in.bev, ws.bev_in);
    detail::normalize_bev(ws.bev_in);
    nn::Buf map_buf;
    detail::tensor_to_buf(in.map, map_buf);
    nn::Buf bev_map;
    nn::concat_forward({&ws.bev_in, &map_buf}, bev_map);
    ws.bev_in = std::move(bev_map);

    nn::conv2d_forward(ws.bev_in, params_.get("bev.s1.w"), params_.get("bev.s1.b"), 1,
                       ws.s1_pre);
    nn::relu_forward(ws.s1_pre, ws.s1);

    ws.proj = raster::RvProjection::build(in.rv, grid_, rv_spec_, arch_.projection_margin_m);
    project_forward(ws.rv_feat, ws.proj, rows, cols, ws.rv_proj);

    nn::concat_forward({&ws.s1, &ws.radar_feat, &ws.rv_proj}, ws.fuse);

    nn::conv2d_forward(ws.fuse, params_.get("bev.s2.w"), params_.get("bev.s2.b"), 2,
                       ws.s2_pre);
    nn::relu_forward(ws.s2_pre, ws.s2);
    nn::conv2d_forward(ws.s2, params_.get("bev.s3.w"), params_.get("bev.s3.b"), 2,
                       ws.s3_pre);
    nn::relu_forward(ws.s3_pre, ws.s3);
    nn::conv2d_forward(ws.s3, params_.get("bev.s4.w"), params_.get("bev.s4.b"), 1,
                       ws.s4_pre);
    nn::relu_forward(ws.s4_pre, ws.s4);

    nn::upsample2d_forward(ws.s4, ws.s2.h, ws.s2.w, ws.bu1_up);
    nn::concat_forward({&ws.bu1_up, &ws.s2}, ws.bu1_cat);
    nn::conv2d_forward(ws.bu1_cat, params_.get("bev.u1.w"), params_.get("bev.u1.b"), 1,
                       ws.bu1_pre);
    nn::relu_forward(ws.bu1_pre, ws.bu1);
    nn::upsample2d_forward(ws.bu1, rows, cols, ws.bu2_up);
    nn::concat_forward({&ws.bu2_up, &ws.fuse}, ws.bu2_cat);
    nn::conv2d_forward(ws.bu2_cat, params_.get("bev.u2.w"), params_.get("bev.u2.b"), 1,
                       ws.bu2_pre);
    nn::relu_forward(ws.bu2_pre, ws.bu2);
    nn::conv2d_forward(ws.bu2, params_.get("bev.stem.w"), params_.get("bev.stem.b"), 1,
                       ws.stem_pre);
    nn::relu_forward(ws.stem_pre, ws.stem);

    run_heads(ws.stem, ws);
    check_heads_finite(ws);
  }

  /// Accumulates parameter gradients for one example. Must be called with
  /// the workspace produced by the matching forward().
  void backward(const ModelInput& in, Workspace& ws, const nn::Buf& dcls,
                const nn::Buf& dbox, const nn::Buf& dtraj) {
    nn::Buf dtrunk;
    backward_heads(ws, dcls, dbox, dtraj, dtrunk);
    if (arch_.heads_only) return;  // input gradients are not needed

    nn::Buf d1;  // scratch

    // head stem
    nn::relu_backward(ws.stem_pre, dtrunk, d1);
    nn::Buf dbu2;
    nn::conv2d_backward(ws.bu2, params_.get("bev.stem.w"), 1, d1, &dbu2,
                        params_.get("bev.stem.w"), params_.get("bev.stem.b"));

    // BEV up path with skip splits
    nn::relu_backward(ws.bu2_pre, dbu2, d1);
    nn::Buf dbu2_cat;
    nn::conv2d_backward(ws.bu2_cat, params_.get("bev.u2.w"), 1, d1, &dbu2_cat,
                        params_.get("bev.u2.w"), params_.get("bev.u2.b"));
    nn::Buf dbu2_up, dfuse_skip;
    dbu2_up.resize(ws.bu2_up.c, ws.bu2_up.h, ws.bu2_up.w);
    dfuse_skip.resize(ws.fuse.c, ws.fuse.h, ws.fuse.w);
    nn::concat_backward(dbu2_cat, {&dbu2_up, &dfuse_skip});
    nn::Buf dbu1;
    nn::upsample2d_backward(ws.bu1, dbu2_up, dbu1);
    nn::relu_backward(ws.bu1_pre, dbu1, d1);
    nn::Buf dbu1_cat;
    nn::conv2d_backward(ws.bu1_cat, params_.get("bev.u1.w"), 1, d1, &dbu1_cat,
                        params_.get("bev.u1.w"), params_.get("bev.u1.b"));
    nn::Buf dbu1_up, ds2_skip;
    dbu1_up.resize(ws.bu1_up.c, ws.bu1_up.h, ws.bu1_up.w);
    ds2_skip.resize(ws.s2.c, ws.s2.h, ws.s2.w);
    nn::concat_backward(dbu1_cat, {&dbu1_up, &ds2_skip});
    nn::Buf ds4;
    nn::upsample2d_backward(ws.s4, dbu1_up, ds4);

    nn::relu_backward(ws.s4_pre, ds4, d1);
    nn::Buf ds3;
    nn::conv2d_backward(ws.s3, params_.get("bev.s4.w"), 1, d1, &ds3,
                        params_.get("bev.s4.w"), params_.get("bev.s4.b"));
    nn::relu_backward(ws.s3_pre, ds3, d1);
    nn::Buf ds2;
    nn::conv2d_backward(ws.s2, params_.get("bev.s3.w"), 2, d1, &ds2,
                        params_.get("bev.s3.w"), params_.get("bev.s3.b"));
    for (size_t i = 0; i < ds2.size(); ++i) ds2.v[i] += ds2_skip.v[i];
    nn::relu_backward(ws.s2_pre, ds2, d1);
    nn::Buf dfuse;
    nn::conv2d_backward(ws.fuse, params_.get("bev.s2.w"), 2, d1, &dfuse,
                        params_.get("bev.s2.w"), params_.get("bev.s2.b"));
    for (size_t i = 0; i < dfuse.size(); ++i) dfuse.v[i] += dfuse_skip.v[i];

    nn::Buf ds1, dradar_feat, drv_proj;
    ds1.resize(ws.s1.c, ws.s1.h, ws.s1.w);
    dradar_feat.resize(ws.radar_feat.c, ws.radar_feat.h, ws.radar_feat.w);
    drv_proj.resize(ws.rv_proj.c, ws.rv_proj.h, ws.rv_proj.w);
    nn::concat_backward(dfuse, {&ds1, &dradar_feat, &drv_proj});

    nn::relu_backward(ws.s1_pre, ds1, d1);
    nn::conv2d_backward(ws.bev_in, params_.get("bev.s1.w"), 1, d1, nullptr,
                        params_.get("bev.s1.w"), params_.get("bev.s1.b"));

    // radar branch
    if (ws.radar_branch_ran) {
      nn::relu_backward(ws.rad2_pre, dradar_feat, d1);
      nn::Buf drad1;
      nn::conv2d_backward(ws.rad1, params_.get("radar.c2.w"), 1, d1, &drad1,
                          params_.get("radar.c2.w"), params_.get("radar.c2.b"));
      nn::relu_backward(ws.rad1_pre, drad1, d1);
      nn::conv2d_backward(ws.radar_in, params_.get("radar.c1.w"), 1, d1, nullptr,
                          params_.get("radar.c1.w"), params_.get("radar.c1.b"));
    }

    // RV branch via the projection transpose
    nn::Buf drv_feat;
    project_backward(drv_proj, ws.proj, ws.rv_feat.h, drv_feat);

    nn::relu_backward(ws.u3_pre, drv_feat, d1);
    nn::Buf du3_cat;
    nn::conv1d_circ_backward(ws.u3_cat, params_.get("rv.u3.w"), 1, d1, &du3_cat,
                             params_.get("rv.u3.w"), params_.get("rv.u3.b"));
    nn::Buf du3_up, dx0;
    du3_up.resize(ws.u3_up.c, ws.u3_up.h, 1);
    dx0.resize(ws.x0.c, ws.x0.h, 1);
    nn::concat_backward(du3_cat, {&du3_up, &dx0});
    nn::Buf du2;
    nn::upsample1d_backward(ws.u2, du3_up, du2);

    nn::relu_backward(ws.u2_pre, du2, d1);
    nn::Buf du2_cat;
    nn::conv1d_circ_backward(ws.u2_cat, params_.get("rv.u2.w"), 1, d1, &du2_cat,
                             params_.get("rv.u2.w"), params_.get("rv.u2.b"));
    nn::Buf du2_up, de1_skip;
    du2_up.resize(ws.u2_up.c, ws.u2_up.h, 1);
    de1_skip.resize(ws.e1.c, ws.e1.h, 1);
    nn::concat_backward(du2_cat, {&du2_up, &de1_skip});
    nn::Buf du1;
    nn::upsample1d_backward(ws.u1, du2_up, du1);

    nn::relu_backward(ws.u1_pre, du1, d1);
    nn::Buf du1_cat;
    nn::conv1d_circ_backward(ws.u1_cat, params_.get("rv.u1.w"), 1, d1, &du1_cat,
                             params_.get("rv.u1.w"), params_.get("rv.u1.b"));
    nn::Buf du1_up, de2_skip;
    du1_up.resize(ws.u1_up.c, ws.u1_up.h, 1);
    de2_skip.resize(ws.e2.c, ws.e2.h, 1);
    nn::concat_backward(du1_cat, {&du1_up, &de2_skip});
    nn::Buf de3;
    nn::upsample1d_backward(ws.e3, du1_up, de3);

    nn::relu_backward(ws.e3_pre, de3, d1);
    nn::Buf de2;
    nn::conv1d_circ_backward(ws.e2, params_.get("rv.e3.w"), 2, d1, &de2,
                             params_.get("rv.e3.w"), params_.get("rv.e3.b"));
    for (size_t i = 0; i < de2.size(); ++i) de2.v[i] += de2_skip.v[i];

    nn::relu_backward(ws.e2_pre, de2, d1);
    nn::Buf de1;
    nn::conv1d_circ_backward(ws.e1, params_.get("rv.e2.w"), 2, d1, &de1,
                             params_.get("rv.e2.w"), params_.get("rv.e2.b"));
    for (size_t i = 0; i < de1.size(); ++i) de1.v[i] += de1_skip.v[i];

    nn::relu_backward(ws.e1_pre, de1, d1);
    nn::Buf dx0_from_e1;
    nn::conv1d_circ_backward(ws.x0, params_.get("rv.e1.w"), 2, d1, &dx0_from_e1,
                             params_.get("rv.e1.w"), params_.get("rv.e1.b"));
    for (size_t i = 0; i < dx0.size(); ++i) dx0.v[i] += dx0_from_e1.v[i];

    nn::Buf dlid_feat, dcam_feat;
    dlid_feat.resize(ws.lid_feat.c, ws.lid_feat.h, 1);
    dcam_feat.resize(ws.cam_feat.c, ws.cam_feat.h, 1);
    nn::concat_backward(dx0, {&dlid_feat, &dcam_feat});

    nn::relu_backward(ws.lid1_pre, dlid_feat, d1);
    nn::conv1d_circ_backward(ws.lid_in, params_.get("rv.lid1.w"), 1, d1, nullptr,
                             params_.get("rv.lid1.w"), params_.get("rv.lid1.b"));

    if (ws.camera_branch_ran) {
      nn::relu_backward(ws.cam2_pre, dcam_feat, d1);
      nn::Buf dcam1;
      nn::conv1d_circ_backward(ws.cam1, params_.get("rv.cam2.w"), 1, d1, &dcam1,
                               params_.get("rv.cam2.w"), params_.get("rv.cam2.b"));
      nn::relu_backward(ws.cam1_pre, dcam1, d1);
      nn::conv1d_circ_backward(ws.cam_in, params_.get("rv.cam1.w"), 1, d1, nullptr,
                               params_.get("rv.cam1.w"), params_.get("rv.cam1.b"));
    }
  }

  DenseOutput dense_output(const Workspace& ws) const {
    DenseOutput out;
    out.cls_logits = detail::buf_to_tensor(ws.cls);
    out.box = detail::buf_to_tensor(ws.box);
    out.traj = detail::buf_to_tensor(ws.traj);
    return out;
  }

 private:
  void check_input(const ModelInput& in) const {
    const int rows = grid_.rows();
    const int cols = grid_.cols();
    const int bins = rv_spec_.azimuth_bins;
    const auto expect = [](const Tensor& t, int c, int h, int w, const char* what) {
      const bool ok = t.shape().size() == 3
                          ? (t.dim(0) == c && t.dim(1) == h && t.dim(2) == w)
                          : (w == 1 && t.shape().size() == 2 && t.dim(0) == c &&
                             t.dim(1) == h);
      if (!ok) throw std::invalid_argument(std::string("forward: bad shape for ") + what);
    };
    expect(in.bev, kBevLidarChannels, rows, cols, "bev");
    expect(in.map, kMapChannels, rows, cols, "map");
    expect(in.radar, kRadarChannels, rows, cols, "radar");
    expect(in.rv, raster::kRvChannels, bins, 1, "rv");
    expect(in.camera, kCameraChannels, bins, 1, "camera");
  }

  void check_heads_finite(const Workspace& ws) const {
    for (const nn::Buf* b : {&ws.cls, &ws.box, &ws.traj}) {
      for (double v : b->v) {
        if (!std::isfinite(v)) {
          throw std::runtime_error("forward: non-finite value in head outputs");
        }
      }
    }
  }

  void run_heads(const nn::Buf& trunk, Workspace& ws) const {
    nn::conv1x1_forward(trunk, params_.get("head.cls.w"), params_.get("head.cls.b"),
                        ws.cls);
    nn::conv1x1_forward(trunk, params_.get("head.box.w"), params_.get("head.box.b"),
                        ws.box);
    nn::conv1x1_forward(trunk, params_.get("head.traj.w"), params_.get("head.traj.b"),
                        ws.traj);
  }

  void backward_heads(Workspace& ws, const nn::Buf& dcls, const nn::Buf& dbox,
                      const nn::Buf& dtraj, nn::Buf& dtrunk) {
    const nn::Buf& trunk = arch_.heads_only ? ws.bu2 : ws.stem;
    nn::Buf d;
    nn::conv1x1_backward(trunk, params_.get("head.cls.w"), dcls, &dtrunk,
                         params_.get("head.cls.w"), params_.get("head.cls.b"));
    nn::conv1x1_backward(trunk, params_.get("head.box.w"), dbox, &d,
                         params_.get("head.box.w"), params_.get("head.box.b"));
    for (size_t i = 0; i < dtrunk.size(); ++i) dtrunk.v[i] += d.v[i];
    nn::conv1x1_backward(trunk, params_.get("head.traj.w"), dtraj, &d,
                         params_.get("head.traj.w"), params_.get("head.traj.b"));
    for (size_t i = 0; i < dtrunk.size(); ++i) dtrunk.v[i] += d.v[i];
  }

  static void project_forward(const nn::Buf& feat, const raster::RvProjection& proj,
                              int rows, int cols, nn::Buf& out) {
    out.resize(feat.c, rows, cols);
    for (int ch = 0; ch < feat.c; ++ch) {
      const double* fp = feat.ch(ch);
      double* op = out.ch(ch);
      for (size_t i = 0; i < out.plane(); ++i) {
        op[i] = proj.visible[i] ? fp[proj.cell_bin[i]] : 0.0;
      }
    }
  }

  static void project_backward(const nn::Buf& dproj, const raster::RvProjection& proj,
                               int bins, nn::Buf& dfeat) {
    dfeat.resize(dproj.c, bins, 1);
    for (int ch = 0; ch < dproj.c; ++ch) {
      const double* dp = dproj.ch(ch);
      double* fp = dfeat.ch(ch);
      for (size_t i = 0; i < dproj.plane(); ++i) {
        if (proj.visible[i]) fp[proj.cell_bin[i]] += dp[i];
      }
    }
  }

  void register_params() {
    const int wrv = arch_.rv_width;
    const int wr = arch_.radar_width;
    const int wb = arch_.bev_width;
    const int head_in = arch_.heads_only ? kBevLidarChannels + kMapChannels : wb;

    if (!arch_.heads_only) {
      add_conv1d("rv.cam1", kCameraChannels, wrv);
      add_conv1d("rv.cam2", wrv, wrv);
      add_conv1d("rv.lid1", raster::kRvChannels, wrv);
      add_conv1d("rv.e1", 2 * wrv, 2 * wrv);
      add_conv1d("rv.e2", 2 * wrv, 4 * wrv);
      add_conv1d("rv.e3", 4 * wrv, 4 * wrv);
      add_conv1d("rv.u1", 8 * wrv, 4 * wrv);
      add_conv1d("rv.u2", 6 * wrv, 2 * wrv);
      add_conv1d("rv.u3", 4 * wrv, wrv);
      add_conv2d("radar.c1", kRadarChannels, wr);
      add_conv2d("radar.c2", wr, wr);
      add_conv2d("bev.s1", kBevLidarChannels + kMapChannels, wb);
      add_conv2d("bev.s2", wb + wr + wrv, 2 * wb);
      add_conv2d("bev.s3", 2 * wb, 2 * wb);
      add_conv2d("bev.s4", 2 * wb, 2 * wb);
      add_conv2d("bev.u1", 4 * wb, wb);                 // up(s4) || s2 skip
      add_conv2d("bev.u2", 2 * wb + wr + wrv, wb);      // up(u1) || fuse skip
      add_conv2d("bev.stem", wb, wb);
    }
    params_.add("head.cls.w", {kClassChannels, head_in});
    params_.add("head.cls.b", {kClassChannels});
    params_.add("head.box.w", {kBoxChannels, head_in});
    params_.add("head.box.b", {kBoxChannels});
    params_.add("head.traj.w", {kTrajChannels, head_in});
    params_.add("head.traj.b", {kTrajChannels});
  }

  void add_conv1d(const std::string& name, int cin, int cout) {
    params_.add(name + ".w", {cout, cin, 3});
    params_.add(name + ".b", {cout});
  }
  void add_conv2d(const std::string& name, int cin, int cout) {
    params_.add(name + ".w", {cout, cin, 3, 3});
    params_.add(name + ".b", {cout});
  }

  ArchConfig arch_;
  raster::GridSpec grid_;
  raster::RvSpec rv_spec_;
  nn::ParamStore params_;
};

}  // namespace msd::net

#endif  // MSD_FUSIONNET_HPP
