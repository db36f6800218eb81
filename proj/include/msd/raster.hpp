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

#ifndef MSD_RASTER_HPP
#define MSD_RASTER_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "msd/geometry.hpp"
#include "msd/tensor.hpp"
#include "msd/worldsim.hpp"

namespace msd::raster {

/// SDV-centered BEV grid. x (length axis) maps to columns, y (width axis)
/// to rows; the SDV sits at the grid center.
struct GridSpec {
  double length_m = 150.0;
  double width_m = 100.0;
  double cell_m = 1.0;

  int rows() const { return static_cast<int>(std::llround(width_m / cell_m)); }
  int cols() const { return static_cast<int>(std::llround(length_m / cell_m)); }

  void validate() const {
    if (cell_m <= 0.0) throw std::invalid_argument("GridSpec: cell_m must be > 0");
    const double r = width_m / cell_m;
    const double c = length_m / cell_m;
    if (std::abs(r - std::llround(r)) > 1e-9 || std::abs(c - std::llround(c)) > 1e-9) {
      throw std::invalid_argument("GridSpec: extents must be integer multiples of cell_m");
    }
  }

  bool cell_of(const geom::Vec2& p, int& row, int& col) const {
    const double fx = (p.x + 0.5 * length_m) / cell_m;
    const double fy = (p.y + 0.5 * width_m) / cell_m;
    col = static_cast<int>(std::floor(fx));
    row = static_cast<int>(std::floor(fy));
    return row >= 0 && row < rows() && col >= 0 && col < cols();
  }

  geom::Vec2 cell_center(int row, int col) const {
    return {-0.5 * length_m + (col + 0.5) * cell_m,
            -0.5 * width_m + (row + 0.5) * cell_m};
  }
};

/// Range-view azimuth raster; bins evenly partition [-pi, pi).
struct RvSpec {
  int azimuth_bins = 360;

  double bin_width() const { return 2.0 * geom::kPi / azimuth_bins; }

  int bin_of(double azimuth) const {
    const double a = geom::wrap_angle(azimuth);
    int b = static_cast<int>(std::floor((a + geom::kPi) / bin_width()));
    return std::clamp(b, 0, azimuth_bins - 1);
  }

  double bin_center(int b) const { return -geom::kPi + (b + 0.5) * bin_width(); }
};

// RV channel layout produced by rasterize_rv.
constexpr int kRvRange = 0;
constexpr int kRvIntensity = 1;
constexpr int kRvOccupancy = 2;
constexpr int kRvChannels = 3;

/// Voxelizes 10 LiDAR sweeps onto the BEV grid: one occupancy-count channel
/// per sweep (oldest first) plus a mean-intensity channel for the current
/// (most recent) sweep. With drop_intensity the intensity channel is filled
/// with the sentinel in every cell so no spatial information leaks.
inline Tensor voxelize_bev(const std::vector<sim::LidarSweep>& sweeps,
                           const GridSpec& grid, bool drop_intensity,
                           double sentinel) {
  if (sweeps.size() != sim::kLidarHistory) {
    throw std::invalid_argument("voxelize_bev: expected exactly 10 sweeps");
  }
  grid.validate();
  const int rows = grid.rows();
  const int cols = grid.cols();
  const int n = static_cast<int>(sweeps.size());

  std::vector<ChannelInfo> legend;
  for (int i = 0; i < n; ++i) {
    legend.push_back({"occupancy_sweep" + std::to_string(i), "count"});
  }
  legend.push_back({"intensity_mean_current", "unitless"});

  Tensor out({n + 1, rows, cols}, std::move(legend));
  std::vector<double> sum(static_cast<size_t>(rows) * cols, 0.0);

  for (int s = 0; s < n; ++s) {
    const sim::LidarSweep& sweep = sweeps[static_cast<size_t>(s)];
    for (const auto& p : sweep.points) {
      int r, c;
      if (!grid.cell_of({p.x, p.y}, r, c)) continue;
      out.at(s, r, c) += 1.0;
      if (s == n - 1) sum[static_cast<size_t>(r) * cols + c] += p.intensity;
    }
  }

  if (drop_intensity) {
    out.fill_channel(n, sentinel);
  } else {
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const double cnt = out.at(n - 1, r, c);
        out.at(n, r, c) = cnt > 0.0 ? sum[static_cast<size_t>(r) * cols + c] / cnt : 0.0;
      }
    }
  }
  return out;
}

/// Range-view raster of the current sweep: per azimuth bin the minimum point
/// range, the intensity of that nearest point, and a binary occupancy flag.
inline Tensor rasterize_rv(const sim::LidarSweep& sweep, const RvSpec& spec,
                           bool drop_intensity, double sentinel) {
  Tensor out({kRvChannels, spec.azimuth_bins},
             {{"range", "m"}, {"intensity", "unitless"}, {"occupancy", "bool"}});
  std::vector<double> best(static_cast<size_t>(spec.azimuth_bins),
                           std::numeric_limits<double>::infinity());
  for (const auto& p : sweep.points) {
    const double range = std::hypot(p.x, p.y);
    const int b = spec.bin_of(std::atan2(p.y, p.x));
    if (range < best[static_cast<size_t>(b)]) {
      best[static_cast<size_t>(b)] = range;
      out.at(kRvRange, b) = range;
      out.at(kRvIntensity, b) = p.intensity;
      out.at(kRvOccupancy, b) = 1.0;
    }
  }
  if (drop_intensity) out.fill_channel(kRvIntensity, sentinel);
  return out;
}

/// Map raster: drivable-area mask and clamped lane-centerline proximity
/// (1 on a centerline, falling linearly to 0 at `proximity_range_m`).
inline Tensor rasterize_map(const sim::MapGeometry& map, const GridSpec& grid,
                            double proximity_range_m = 5.0) {
  grid.validate();
  const int rows = grid.rows();
  const int cols = grid.cols();
  Tensor out({2, rows, cols},
             {{"drivable_mask", "bool"}, {"centerline_proximity", "unitless"}});
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const geom::Vec2 p = grid.cell_center(r, c);
      out.at(0, r, c) = geom::point_in_polygon(p, map.drivable_area) ? 1.0 : 0.0;
      double d = std::numeric_limits<double>::infinity();
      for (const auto& lane : map.lane_centerlines) {
        d = std::min(d, geom::point_polyline_distance(p, lane));
      }
      if (std::isfinite(d)) {
        out.at(1, r, c) = std::max(0.0, 1.0 - d / proximity_range_m);
      }
    }
  }
  return out;
}

constexpr int kRadarChannelsPerSweep = 5;

/// Radar raster: per sweep and cell {return count, mean radial velocity
/// decomposed along the cell-center azimuth, max amplitude, sweep age}.
/// Sweeps are stacked oldest first.
inline Tensor rasterize_radar(const std::vector<sim::RadarSweep>& sweeps,
                              const GridSpec& grid) {
  if (sweeps.size() != sim::kRadarHistory) {
    throw std::invalid_argument("rasterize_radar: expected exactly 3 sweeps");
  }
  grid.validate();
  const int rows = grid.rows();
  const int cols = grid.cols();
  const int n = static_cast<int>(sweeps.size());

  std::vector<ChannelInfo> legend;
  for (int s = 0; s < n; ++s) {
    const std::string p = "sweep" + std::to_string(s) + "_";
    legend.push_back({p + "count", "count"});
    legend.push_back({p + "rv_x", "m/s"});
    legend.push_back({p + "rv_y", "m/s"});
    legend.push_back({p + "amp_max", "unitless"});
    legend.push_back({p + "age", "s"});
  }
  Tensor out({n * kRadarChannelsPerSweep, rows, cols}, std::move(legend));

  for (int s = 0; s < n; ++s) {
    const int base = s * kRadarChannelsPerSweep;
    const double age = 0.1 * (n - 1 - s);
    out.fill_channel(base + 4, age);
    std::vector<double> rv_sum(static_cast<size_t>(rows) * cols, 0.0);
    for (const auto& ret : sweeps[static_cast<size_t>(s)].returns) {
      int r, c;
      if (!grid.cell_of({ret.x, ret.y}, r, c)) continue;
      out.at(base + 0, r, c) += 1.0;
      rv_sum[static_cast<size_t>(r) * cols + c] += ret.radial_velocity;
      out.at(base + 3, r, c) = std::max(out.at(base + 3, r, c), ret.amplitude);
    }
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const double cnt = out.at(base + 0, r, c);
        if (cnt <= 0.0) continue;
        const double mean_rv = rv_sum[static_cast<size_t>(r) * cols + c] / cnt;
        const geom::Vec2 center = grid.cell_center(r, c);
        const double theta = std::atan2(center.y, center.x);
        out.at(base + 1, r, c) = mean_rv * std::cos(theta);
        out.at(base + 2, r, c) = mean_rv * std::sin(theta);
      }
    }
  }
  return out;
}

/// Nearest-neighbor resampling of camera pixels onto RV azimuth bins.
/// Channels: {r, g, b, validity}; bins outside the FOV are zero with
/// validity 0.
inline Tensor align_camera_to_rv(const sim::CameraImage& camera, const RvSpec& spec) {
  Tensor out({4, spec.azimuth_bins},
             {{"r", "unitless"}, {"g", "unitless"}, {"b", "unitless"}, {"valid", "bool"}});
  const int npix = static_cast<int>(camera.pixels.size());
  if (npix == 0) return out;
  const double span = camera.fov_max - camera.fov_min;
  const double pix_width = span / npix;
  for (int b = 0; b < spec.azimuth_bins; ++b) {
    const double az = spec.bin_center(b);
    if (az < camera.fov_min || az >= camera.fov_max) continue;
    int idx = static_cast<int>(std::floor((az - camera.fov_min) / pix_width));
    idx = std::clamp(idx, 0, npix - 1);
    for (int ch = 0; ch < 3; ++ch) {
      out.at(ch, b) = camera.pixels[static_cast<size_t>(idx)][static_cast<size_t>(ch)];
    }
    out.at(3, b) = 1.0;
  }
  return out;
}

/// Precomputed RV->BEV scatter geometry: for every BEV cell, the azimuth bin
/// of its center and whether that cell is inside the bin's visible range
/// (hit range + margin; unbounded for unoccupied bins).
struct RvProjection {
  int rows = 0;
  int cols = 0;
  std::vector<int> cell_bin;       // rows*cols
  std::vector<uint8_t> visible;    // rows*cols

  static RvProjection build(const Tensor& rv, const GridSpec& grid, const RvSpec& spec,
                            double margin_m = 2.0) {
    RvProjection proj;
    proj.rows = grid.rows();
    proj.cols = grid.cols();
    proj.cell_bin.resize(static_cast<size_t>(proj.rows) * proj.cols);
    proj.visible.resize(static_cast<size_t>(proj.rows) * proj.cols);
    for (int r = 0; r < proj.rows; ++r) {
      for (int c = 0; c < proj.cols; ++c) {
        const geom::Vec2 p = grid.cell_center(r, c);
        const int b = spec.bin_of(std::atan2(p.y, p.x));
        const size_t i = static_cast<size_t>(r) * proj.cols + c;
        proj.cell_bin[i] = b;
        const bool occupied = rv.at(kRvOccupancy, b) > 0.5;
        const double range = rv.at(kRvRange, b);
        proj.visible[i] = (!occupied || p.norm() <= range + margin_m) ? 1 : 0;
      }
    }
    return proj;
  }
};

/// Projects RV features onto the BEV grid: each visible cell receives the
/// feature vector of its azimuth bin, occluded cells receive zero. Linear in
/// the feature argument.
inline Tensor project_rv_to_bev(const Tensor& rv_features, const RvProjection& proj,
                                const GridSpec& grid) {
  const int f = rv_features.dim(0);
  Tensor out({f, grid.rows(), grid.cols()}, rv_features.legend());
  for (int ch = 0; ch < f; ++ch) {
    for (int r = 0; r < proj.rows; ++r) {
      for (int c = 0; c < proj.cols; ++c) {
        const size_t i = static_cast<size_t>(r) * proj.cols + c;
        if (!proj.visible[i]) continue;
        out.at(ch, r, c) = rv_features.at(ch, proj.cell_bin[i]);
      }
    }
  }
  return out;
}

}  // namespace msd::raster

#endif  // MSD_RASTER_HPP
