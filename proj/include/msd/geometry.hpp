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

#ifndef MSD_GEOMETRY_HPP
#define MSD_GEOMETRY_HPP

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

namespace msd::geom {

constexpr double kPi = std::numbers::pi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  double squared_norm() const { return x * x + y * y; }
};

inline Vec2 rotate(const Vec2& v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Wraps an angle into [-pi, pi).
inline double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a - kPi;
}

/// Rigid 2D pose. `to_world` maps local coordinates into the parent frame,
/// `to_local` is the inverse transform.
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  Vec2 position() const { return {x, y}; }

  Vec2 to_world(const Vec2& local) const {
    const Vec2 r = rotate(local, heading);
    return {r.x + x, r.y + y};
  }

  Vec2 to_local(const Vec2& world) const {
    return rotate({world.x - x, world.y - y}, -heading);
  }
};

/// Oriented rectangle: center, heading of the long axis, full extents.
struct OrientedBox {
  Vec2 center;
  double heading = 0.0;
  double length = 0.0;  // extent along heading
  double width = 0.0;   // extent perpendicular to heading

  double area() const { return length * width; }

  /// Corner order is counter-clockwise starting front-left.
  std::array<Vec2, 4> corners() const {
    const Vec2 ax = rotate({1.0, 0.0}, heading);
    const Vec2 ay = rotate({0.0, 1.0}, heading);
    const Vec2 dl = ax * (0.5 * length);
    const Vec2 dw = ay * (0.5 * width);
    return {center + dl + dw, center - dl + dw, center - dl - dw, center + dl - dw};
  }

  bool contains(const Vec2& p) const {
    const Vec2 d = rotate(p - center, -heading);
    return std::abs(d.x) <= 0.5 * length && std::abs(d.y) <= 0.5 * width;
  }
};

/// Shoelace area; positive for counter-clockwise polygons.
inline double polygon_area(const std::vector<Vec2>& poly) {
  if (poly.size() < 3) return 0.0;
  double a = 0.0;
  for (size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    a += p.cross(q);
  }
  return 0.5 * a;
}

/// Sutherland-Hodgman clipping of a polygon against a convex,
/// counter-clockwise clip polygon.
inline std::vector<Vec2> clip_convex(const std::vector<Vec2>& subject,
                                     const std::vector<Vec2>& clip) {
  std::vector<Vec2> out = subject;
  for (size_t i = 0; i < clip.size() && !out.empty(); ++i) {
    const Vec2 a = clip[i];
    const Vec2 b = clip[(i + 1) % clip.size()];
    const Vec2 edge = b - a;
    std::vector<Vec2> in;
    in.swap(out);
    const auto inside = [&](const Vec2& p) { return edge.cross(p - a) >= 0.0; };
    for (size_t j = 0; j < in.size(); ++j) {
      const Vec2 cur = in[j];
      const Vec2 prev = in[(j + in.size() - 1) % in.size()];
      const bool cur_in = inside(cur);
      const bool prev_in = inside(prev);
      if (cur_in) {
        if (!prev_in) {
          const double denom = edge.cross(cur - prev);
          const double t = denom != 0.0 ? edge.cross(a - prev) / denom : 0.0;
          out.push_back(prev + (cur - prev) * t);
        }
        out.push_back(cur);
      } else if (prev_in) {
        const double denom = edge.cross(cur - prev);
        const double t = denom != 0.0 ? edge.cross(a - prev) / denom : 0.0;
        out.push_back(prev + (cur - prev) * t);
      }
    }
  }
  return out;
}

/// Intersection area of two oriented rectangles via convex clipping.
inline double intersection_area(const OrientedBox& a, const OrientedBox& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  const std::vector<Vec2> pa(ca.begin(), ca.end());
  const std::vector<Vec2> pb(cb.begin(), cb.end());
  const std::vector<Vec2> inter = clip_convex(pa, pb);
  return std::abs(polygon_area(inter));
}

/// Even-odd point-in-polygon test; works for arbitrary simple polygons.
inline bool point_in_polygon(const Vec2& p, const std::vector<Vec2>& poly) {
  bool inside = false;
  const size_t n = poly.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double xint = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
      if (p.x < xint) inside = !inside;
    }
  }
  return inside;
}

/// Distance along the ray (origin, unit dir) to segment [a,b], if it hits.
inline std::optional<double> ray_segment(const Vec2& origin, const Vec2& dir,
                                         const Vec2& a, const Vec2& b) {
  const Vec2 seg = b - a;
  const double denom = dir.cross(seg);
  if (std::abs(denom) < 1e-15) return std::nullopt;  // parallel
  const Vec2 ao = a - origin;
  const double t = ao.cross(seg) / denom;
  const double s = ao.cross(dir) / denom;
  if (t >= 0.0 && s >= 0.0 && s <= 1.0) return t;
  return std::nullopt;
}

/// Whether open segment (p,q) intersects segment [a,b] properly.
inline bool segments_intersect(const Vec2& p, const Vec2& q, const Vec2& a,
                               const Vec2& b) {
  const Vec2 d = q - p;
  const Vec2 seg = b - a;
  const double denom = d.cross(seg);
  if (std::abs(denom) < 1e-15) return false;
  const Vec2 ap = a - p;
  const double t = ap.cross(seg) / denom;
  const double s = ap.cross(d) / denom;
  return t > 1e-9 && t < 1.0 - 1e-9 && s >= 0.0 && s <= 1.0;
}

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 seg = b - a;
  const double len2 = seg.squared_norm();
  if (len2 < 1e-30) return (p - a).norm();
  double t = (p - a).dot(seg) / len2;
  t = std::max(0.0, std::min(1.0, t));
  return (p - (a + seg * t)).norm();
}

inline double point_polyline_distance(const Vec2& p, const std::vector<Vec2>& line) {
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i + 1 < line.size(); ++i) {
    best = std::min(best, point_segment_distance(p, line[i], line[i + 1]));
  }
  return best;
}

}  // namespace msd::geom

#endif  // MSD_GEOMETRY_HPP
