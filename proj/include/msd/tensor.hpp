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

#ifndef MSD_TENSOR_HPP
#define MSD_TENSOR_HPP

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace msd {

struct ChannelInfo {
  std::string name;
  std::string unit;
};

/// Dense row-major numeric array with shape metadata and a channel legend.
/// Dimension 0 is the channel axis; rasters are (C, rows, cols) and
/// azimuth rasters are (C, bins).
class Tensor {
 public:
  Tensor() = default;

  Tensor(std::vector<int> shape, std::vector<ChannelInfo> legend = {})
      : shape_(std::move(shape)), legend_(std::move(legend)) {
    size_t n = 1;
    for (int d : shape_) {
      if (d <= 0) throw std::invalid_argument("Tensor: non-positive dimension");
      n *= static_cast<size_t>(d);
    }
    data_.assign(n, 0.0);
  }

  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
  size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  const std::vector<ChannelInfo>& legend() const { return legend_; }
  void set_legend(std::vector<ChannelInfo> legend) { legend_ = std::move(legend); }

  // (c, i) indexing for 2D tensors
  double& at(int c, int i) {
    return data_[static_cast<size_t>(c) * shape_[1] + i];
  }
  double at(int c, int i) const {
    return data_[static_cast<size_t>(c) * shape_[1] + i];
  }

  // (c, r, col) indexing for 3D tensors
  double& at(int c, int r, int col) {
    return data_[(static_cast<size_t>(c) * shape_[1] + r) * shape_[2] + col];
  }
  double at(int c, int r, int col) const {
    return data_[(static_cast<size_t>(c) * shape_[1] + r) * shape_[2] + col];
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  /// Fills one whole channel slice.
  void fill_channel(int c, double v) {
    const size_t stride = data_.size() / static_cast<size_t>(shape_[0]);
    std::fill(data_.begin() + static_cast<long>(stride) * c,
              data_.begin() + static_cast<long>(stride) * (c + 1), v);
  }

  size_t channel_stride() const {
    return data_.size() / static_cast<size_t>(shape_[0]);
  }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
  std::vector<ChannelInfo> legend_;
};

}  // namespace msd

#endif  // MSD_TENSOR_HPP
