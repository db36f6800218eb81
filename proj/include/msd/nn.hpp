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

#ifndef MSD_NN_HPP
#define MSD_NN_HPP

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "msd/rng.hpp"

namespace msd::nn {

/// Channel-major activation buffer; 1D signals use w == 1 with h as the
/// spatial axis handled by the conv1d routines.
struct Buf {
  int c = 0, h = 0, w = 0;
  std::vector<double> v;

  void resize(int c_, int h_, int w_) {
    c = c_;
    h = h_;
    w = w_;
    v.assign(static_cast<size_t>(c) * h * w, 0.0);
  }
  size_t plane() const { return static_cast<size_t>(h) * w; }
  size_t size() const { return v.size(); }
  double* ch(int i) { return v.data() + static_cast<size_t>(i) * plane(); }
  const double* ch(int i) const { return v.data() + static_cast<size_t>(i) * plane(); }
  void zero() { std::fill(v.begin(), v.end(), 0.0); }
};

struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;
  std::vector<double> adam_m;
  std::vector<double> adam_v;

  size_t size() const { return value.size(); }
};

class ParamStore {
 public:
  Param& add(const std::string& name, std::vector<int> shape) {
    if (index_.count(name)) throw std::invalid_argument("duplicate param: " + name);
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    Param p;
    p.name = name;
    p.shape = std::move(shape);
    p.value.assign(n, 0.0);
    p.grad.assign(n, 0.0);
    p.adam_m.assign(n, 0.0);
    p.adam_v.assign(n, 0.0);
    index_[name] = items_.size();
    items_.push_back(std::move(p));
    return items_.back();
  }

  Param& get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no such param: " + name);
    return items_[it->second];
  }
  const Param& get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no such param: " + name);
    return items_[it->second];
  }
  bool has(const std::string& name) const { return index_.count(name) > 0; }

  std::vector<Param>& items() { return items_; }
  const std::vector<Param>& items() const { return items_; }

  size_t total_size() const {
    size_t n = 0;
    for (const auto& p : items_) n += p.size();
    return n;
  }

  void zero_grads() {
    for (auto& p : items_) std::fill(p.grad.begin(), p.grad.end(), 0.0);
  }

  void scale_grads(double s) {
    for (auto& p : items_) {
      for (double& g : p.grad) g *= s;
    }
  }

  bool grads_finite() const {
    for (const auto& p : items_) {
      for (double g : p.grad) {
        if (!std::isfinite(g)) return false;
      }
    }
    return true;
  }

  std::vector<double> snapshot_values() const {
    std::vector<double> out;
    out.reserve(total_size());
    for (const auto& p : items_) out.insert(out.end(), p.value.begin(), p.value.end());
    return out;
  }

  void restore_values(const std::vector<double>& snap) {
    size_t off = 0;
    for (auto& p : items_) {
      std::copy(snap.begin() + static_cast<long>(off),
                snap.begin() + static_cast<long>(off + p.size()), p.value.begin());
      off += p.size();
    }
  }

 private:
  std::vector<Param> items_;
  std::unordered_map<std::string, size_t> index_;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

inline void adam_step(ParamStore& store, const AdamConfig& cfg, long step_1based,
                      double lr) {
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_1based));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_1based));
  for (auto& p : store.items()) {
    for (size_t i = 0; i < p.size(); ++i) {
      const double g = p.grad[i];
      p.adam_m[i] = cfg.beta1 * p.adam_m[i] + (1.0 - cfg.beta1) * g;
      p.adam_v[i] = cfg.beta2 * p.adam_v[i] + (1.0 - cfg.beta2) * g * g;
      const double mhat = p.adam_m[i] / bc1;
      const double vhat = p.adam_v[i] / bc2;
      p.value[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

// ---------------------------------------------------------------------------
// 2D convolution, kernel 3x3, zero padding 1, stride 1 or 2.

inline int conv_out_dim(int n, int stride) {
  return stride == 1 ? n : (n - 1) / 2 + 1;
}

inline void conv2d_forward(const Buf& in, const Param& w, const Param& b, int stride,
                           Buf& out) {
  const int cin = in.c, hin = in.h, win = in.w;
  const int cout = static_cast<int>(b.size());
  const int ho = conv_out_dim(hin, stride);
  const int wo = conv_out_dim(win, stride);
  out.resize(cout, ho, wo);
  for (int co = 0; co < cout; ++co) {
    double* op = out.ch(co);
    const double bias = b.value[static_cast<size_t>(co)];
    for (size_t i = 0; i < out.plane(); ++i) op[i] = bias;
  }
  for (int co = 0; co < cout; ++co) {
    double* op = out.ch(co);
    for (int ci = 0; ci < cin; ++ci) {
      const double* ip = in.ch(ci);
      const double* wp =
          w.value.data() + (static_cast<size_t>(co) * cin + ci) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double wv = wp[ky * 3 + kx];
          if (wv == 0.0) continue;
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * stride + ky - 1;
            if (iy < 0 || iy >= hin) continue;
            // clamp the ox range so that ix stays in bounds
            int ox0 = 0;
            while (ox0 * stride + kx - 1 < 0) ++ox0;
            int ox1 = wo;
            while (ox1 > ox0 && (ox1 - 1) * stride + kx - 1 >= win) --ox1;
            const double* irow = ip + static_cast<size_t>(iy) * win + (kx - 1);
            double* orow = op + static_cast<size_t>(oy) * wo;
            if (stride == 1) {
              for (int ox = ox0; ox < ox1; ++ox) orow[ox] += wv * irow[ox];
            } else {
              for (int ox = ox0; ox < ox1; ++ox) orow[ox] += wv * irow[2 * ox];
            }
          }
        }
      }
    }
  }
}

inline void conv2d_backward(const Buf& in, const Param& w, int stride, const Buf& dout,
                            Buf* din, Param& wgrad_target, Param& bgrad_target) {
  const int cin = in.c, hin = in.h, win = in.w;
  const int cout = dout.c;
  const int ho = dout.h, wo = dout.w;
  if (din) din->resize(cin, hin, win);

  for (int co = 0; co < cout; ++co) {
    const double* dp = dout.ch(co);
    double acc = 0.0;
    for (size_t i = 0; i < dout.plane(); ++i) acc += dp[i];
    bgrad_target.grad[static_cast<size_t>(co)] += acc;
  }

  for (int co = 0; co < cout; ++co) {
    const double* dp = dout.ch(co);
    for (int ci = 0; ci < cin; ++ci) {
      const double* ip = in.ch(ci);
      double* dwp = wgrad_target.grad.data() + (static_cast<size_t>(co) * cin + ci) * 9;
      const double* wp = w.value.data() + (static_cast<size_t>(co) * cin + ci) * 9;
      double* dip = din ? din->ch(ci) : nullptr;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double wv = wp[ky * 3 + kx];
          double dw = 0.0;
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * stride + ky - 1;
            if (iy < 0 || iy >= hin) continue;
            int ox0 = 0;
            while (ox0 * stride + kx - 1 < 0) ++ox0;
            int ox1 = wo;
            while (ox1 > ox0 && (ox1 - 1) * stride + kx - 1 >= win) --ox1;
            const double* irow = ip + static_cast<size_t>(iy) * win + (kx - 1);
            const double* drow = dp + static_cast<size_t>(oy) * wo;
            if (stride == 1) {
              for (int ox = ox0; ox < ox1; ++ox) dw += irow[ox] * drow[ox];
            } else {
              for (int ox = ox0; ox < ox1; ++ox) dw += irow[2 * ox] * drow[ox];
            }
            if (dip) {
              double* dirow = dip + static_cast<size_t>(iy) * win + (kx - 1);
              if (stride == 1) {
                for (int ox = ox0; ox < ox1; ++ox) dirow[ox] += wv * drow[ox];
              } else {
                for (int ox = ox0; ox < ox1; ++ox) dirow[2 * ox] += wv * drow[ox];
              }
            }
          }
          dwp[ky * 3 + kx] += dw;
        }
      }
    }
  }
}

// 1x1 convolution (used by the dense heads).
inline void conv1x1_forward(const Buf& in, const Param& w, const Param& b, Buf& out) {
  const int cin = in.c;
  const int cout = static_cast<int>(b.size());
  out.resize(cout, in.h, in.w);
  const size_t plane = in.plane();
  for (int co = 0; co < cout; ++co) {
    double* op = out.ch(co);
    const double bias = b.value[static_cast<size_t>(co)];
    for (size_t i = 0; i < plane; ++i) op[i] = bias;
    for (int ci = 0; ci < cin; ++ci) {
      const double wv = w.value[static_cast<size_t>(co) * cin + ci];
      const double* ip = in.ch(ci);
      for (size_t i = 0; i < plane; ++i) op[i] += wv * ip[i];
    }
  }
}

inline void conv1x1_backward(const Buf& in, const Param& w, const Buf& dout, Buf* din,
                             Param& wgrad_target, Param& bgrad_target) {
  const int cin = in.c;
  const int cout = dout.c;
  const size_t plane = in.plane();
  if (din) din->resize(cin, in.h, in.w);
  for (int co = 0; co < cout; ++co) {
    const double* dp = dout.ch(co);
    double acc = 0.0;
    for (size_t i = 0; i < plane; ++i) acc += dp[i];
    bgrad_target.grad[static_cast<size_t>(co)] += acc;
    for (int ci = 0; ci < cin; ++ci) {
      const double* ip = in.ch(ci);
      double dw = 0.0;
      for (size_t i = 0; i < plane; ++i) dw += ip[i] * dp[i];
      wgrad_target.grad[static_cast<size_t>(co) * cin + ci] += dw;
      if (din) {
        const double wv = w.value[static_cast<size_t>(co) * cin + ci];
        double* dip = din->ch(ci);
        for (size_t i = 0; i < plane; ++i) dip[i] += wv * dp[i];
      }
    }
  }
}

// ---------------------------------------------------------------------------
// 1D convolution over azimuth with circular padding, kernel 3.

inline void conv1d_circ_forward(const Buf& in, const Param& w, const Param& b,
                                int stride, Buf& out) {
  const int cin = in.c;
  const int n = in.h;  // 1D signals store the axis in h (w == 1)
  const int cout = static_cast<int>(b.size());
  const int no = stride == 1 ? n : (n - 1) / 2 + 1;
  out.resize(cout, no, 1);
  for (int co = 0; co < cout; ++co) {
    double* op = out.ch(co);
    const double bias = b.value[static_cast<size_t>(co)];
    for (int o = 0; o < no; ++o) op[o] = bias;
    for (int ci = 0; ci < cin; ++ci) {
      const double* ip = in.ch(ci);
      const double* wp = w.value.data() + (static_cast<size_t>(co) * cin + ci) * 3;
      for (int o = 0; o < no; ++o) {
        const int base = o * stride;
        const int im = (base - 1 + n) % n;
        const int ip1 = (base + 1) % n;
        op[o] += wp[0] * ip[im] + wp[1] * ip[base] + wp[2] * ip[ip1];
      }
    }
  }
}

inline void conv1d_circ_backward(const Buf& in, const Param& w, int stride,
                                 const Buf& dout, Buf* din, Param& wgrad_target,
                                 Param& bgrad_target) {
  const int cin = in.c;
  const int n = in.h;
  const int cout = dout.c;
  const int no = dout.h;
  if (din) din->resize(cin, n, 1);
  for (int co = 0; co < cout; ++co) {
    const double* dp = dout.ch(co);
    double acc = 0.0;
    for (int o = 0; o < no; ++o) acc += dp[o];
    bgrad_target.grad[static_cast<size_t>(co)] += acc;
    for (int ci = 0; ci < cin; ++ci) {
      const double* ip = in.ch(ci);
      double* dwp = wgrad_target.grad.data() + (static_cast<size_t>(co) * cin + ci) * 3;
      const double* wp = w.value.data() + (static_cast<size_t>(co) * cin + ci) * 3;
      double* dip = din ? din->ch(ci) : nullptr;
      for (int o = 0; o < no; ++o) {
        const int base = o * stride;
        const int im = (base - 1 + n) % n;
        const int ip1 = (base + 1) % n;
        const double d = dp[o];
        dwp[0] += ip[im] * d;
        dwp[1] += ip[base] * d;
        dwp[2] += ip[ip1] * d;
        if (dip) {
          dip[im] += wp[0] * d;
          dip[base] += wp[1] * d;
          dip[ip1] += wp[2] * d;
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// ReLU and nearest-neighbor upsampling.

inline void relu_forward(const Buf& in, Buf& out) {
  out.resize(in.c, in.h, in.w);
  for (size_t i = 0; i < in.size(); ++i) out.v[i] = in.v[i] > 0.0 ? in.v[i] : 0.0;
}

inline void relu_backward(const Buf& pre, const Buf& dout, Buf& din) {
  din.resize(pre.c, pre.h, pre.w);
  for (size_t i = 0; i < pre.size(); ++i) din.v[i] = pre.v[i] > 0.0 ? dout.v[i] : 0.0;
}

/// Nearest x2 upsampling cropped to (ho, wo); requires ceil(ho/2) == in.h.
inline void upsample2d_forward(const Buf& in, int ho, int wo, Buf& out) {
  out.resize(in.c, ho, wo);
  for (int c = 0; c < in.c; ++c) {
    const double* ip = in.ch(c);
    double* op = out.ch(c);
    for (int y = 0; y < ho; ++y) {
      const double* irow = ip + static_cast<size_t>(y / 2) * in.w;
      double* orow = op + static_cast<size_t>(y) * wo;
      for (int x = 0; x < wo; ++x) orow[x] = irow[x / 2];
    }
  }
}

inline void upsample2d_backward(const Buf& in, const Buf& dout, Buf& din) {
  din.resize(in.c, in.h, in.w);
  for (int c = 0; c < in.c; ++c) {
    double* dip = din.ch(c);
    const double* dp = dout.ch(c);
    for (int y = 0; y < dout.h; ++y) {
      double* dirow = dip + static_cast<size_t>(y / 2) * in.w;
      const double* drow = dp + static_cast<size_t>(y) * dout.w;
      for (int x = 0; x < dout.w; ++x) dirow[x / 2] += drow[x];
    }
  }
}

inline void upsample1d_forward(const Buf& in, int no, Buf& out) {
  out.resize(in.c, no, 1);
  for (int c = 0; c < in.c; ++c) {
    const double* ip = in.ch(c);
    double* op = out.ch(c);
    for (int o = 0; o < no; ++o) op[o] = ip[o / 2];
  }
}

inline void upsample1d_backward(const Buf& in, const Buf& dout, Buf& din) {
  din.resize(in.c, in.h, 1);
  for (int c = 0; c < in.c; ++c) {
    double* dip = din.ch(c);
    const double* dp = dout.ch(c);
    for (int o = 0; o < dout.h; ++o) dip[o / 2] += dp[o];
  }
}

/// Channel concatenation (same spatial dims).
inline void concat_forward(const std::vector<const Buf*>& parts, Buf& out) {
  int c = 0;
  for (const Buf* p : parts) c += p->c;
  out.resize(c, parts[0]->h, parts[0]->w);
  int off = 0;
  for (const Buf* p : parts) {
    std::memcpy(out.ch(off), p->v.data(), p->v.size() * sizeof(double));
    off += p->c;
  }
}

/// Splits dout back into per-part gradients. Every entry must be pre-sized
/// to its forward shape; pass the channel count via the buffer itself.
inline void concat_backward(const Buf& dout, const std::vector<Buf*>& dparts) {
  int off = 0;
  for (Buf* p : dparts) {
    std::memcpy(p->v.data(), dout.ch(off), p->v.size() * sizeof(double));
    off += p->c;
  }
}

}  // namespace msd::nn

#endif  // MSD_NN_HPP
