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

#ifndef MSD_RNG_HPP
#define MSD_RNG_HPP

#include <cmath>
#include <cstdint>

namespace msd {

namespace detail {
inline uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t mix(uint64_t v) {
  uint64_t s = v;
  return splitmix64(s);
}
}  // namespace detail

/// Deterministic, platform-independent generator (splitmix64 core).
/// std distributions are intentionally avoided: their output is
/// implementation-defined and would break cross-build reproducibility.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(detail::mix(seed ^ 0x6d73642d726e6700ULL)) {}

  /// Independent stream keyed by (seed, stream, substream).
  static Rng derive(uint64_t seed, uint64_t stream, uint64_t substream = 0) {
    uint64_t s = detail::mix(seed);
    s = detail::mix(s ^ detail::mix(stream ^ 0x9e3779b97f4a7c15ULL));
    s = detail::mix(s ^ detail::mix(substream ^ 0xd1b54a32d192ed03ULL));
    Rng r(0);
    r.state_ = s;
    return r;
  }

  uint64_t next_u64() { return detail::splitmix64(state_); }

  /// Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  /// Uniform integer in [lo, hi], inclusive.
  int next_int(int lo, int hi) {
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
  }

  bool next_bernoulli(double p) { return next_double() < p; }

  /// Box-Muller; consumes two uniforms per call.
  double next_gaussian(double mean = 0.0, double sigma = 1.0) {
    const double u1 = 1.0 - next_double();  // (0, 1]
    const double u2 = next_double();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    return mean + sigma * mag * std::cos(2.0 * 3.141592653589793 * u2);
  }

  uint64_t state() const { return state_; }

 private:
  uint64_t state_;
};

/// 64-bit FNV-1a, used for config hashing.
inline uint64_t fnv1a64(const void* data, size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace msd

#endif  // MSD_RNG_HPP
