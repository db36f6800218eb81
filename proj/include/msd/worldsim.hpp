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

#ifndef MSD_WORLDSIM_HPP
#define MSD_WORLDSIM_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "msd/geometry.hpp"
#include "msd/rng.hpp"

namespace msd::sim {

enum class ActorClass { kVehicle = 0, kPedestrian = 1, kBicyclist = 2 };
constexpr int kNumClasses = 3;

inline const char* class_name(ActorClass c) {
  switch (c) {
    case ActorClass::kVehicle: return "vehicle";
    case ActorClass::kPedestrian: return "pedestrian";
    case ActorClass::kBicyclist: return "bicyclist";
  }
  return "?";
}

struct Actor {
  int id = 0;
  ActorClass cls = ActorClass::kVehicle;
  geom::Pose pose;              // world frame
  double length = 0.0;          // m, along heading
  double width = 0.0;           // m
  geom::Vec2 velocity;          // m/s, world frame
  double turn_rate = 0.0;       // rad/s
  double reflectivity = 0.5;    // [0,1], drives LiDAR intensity
  std::array<double, 3> appearance{0.5, 0.5, 0.5};  // camera color, [0,1]

  geom::OrientedBox box() const {
    return {{pose.x, pose.y}, pose.heading, length, width};
  }
};

struct MapGeometry {
  std::vector<geom::Vec2> drivable_area;                // convex, CCW
  std::vector<std::vector<geom::Vec2>> lane_centerlines;
};

struct Scene {
  uint64_t seed = 0;
  geom::Pose sdv_pose;        // at t = 0
  geom::Vec2 sdv_velocity;    // world frame, constant speed
  double sdv_turn_rate = 0.0;
  std::vector<Actor> actors;  // state at t = 0
  MapGeometry map;            // world frame
  double duration_s = 4.0;
  double sample_rate_hz = 10.0;
};

struct LidarPoint {
  double x = 0.0;  // SDV frame of the sweep timestamp
  double y = 0.0;
  double intensity = 0.0;  // [0,1]
};

struct LidarSweep {
  double timestamp_s = 0.0;
  std::vector<LidarPoint> points;
  std::vector<int> hit_actor_ids;  // parallel to points; -1 for map boundary
  int azimuth_bin_count = 0;
};

struct RadarReturn {
  double x = 0.0;  // SDV frame of the sweep timestamp
  double y = 0.0;
  double radial_velocity = 0.0;  // m/s, negative = approaching
  double amplitude = 0.0;
};

struct RadarSweep {
  double timestamp_s = 0.0;
  std::vector<RadarReturn> returns;
  std::vector<int> actor_ids;  // parallel to returns; generating actor
};

struct CameraImage {
  double timestamp_s = 0.0;
  double fov_min = -geom::kPi / 4.0;  // azimuth in SDV frame
  double fov_max = geom::kPi / 4.0;
  std::vector<std::array<double, 3>> pixels;  // [0,1], azimuth-ordered
};

constexpr int kFutureSteps = 30;
constexpr double kFutureDt = 0.1;

struct GroundTruthLabel {
  int actor_id = 0;
  ActorClass cls = ActorClass::kVehicle;
  geom::OrientedBox box;  // SDV frame at label time
  std::array<geom::Vec2, kFutureSteps> future;  // SDV frame at label time
  bool in_fov = false;
  int num_lidar_hits = 0;
};

/// One training/eval sample: sweep history re-expressed in the SDV frame at
/// `timestamp_s`, the current camera image, labels, and the map geometry in
/// the same frame (needed downstream by the map rasterizer).
struct SensorFrame {
  double timestamp_s = 0.0;
  std::vector<LidarSweep> lidar_sweeps;  // 10, oldest first, SDV frame at t
  std::vector<RadarSweep> radar_sweeps;  // 3, oldest first, SDV frame at t
  CameraImage camera;
  std::vector<GroundTruthLabel> labels;
  MapGeometry map;  // SDV frame at t
  uint64_t scene_seed = 0;
};

struct ClassParams {
  double length_min, length_max;
  double speed_min, speed_max;
  double turn_rate_max;
  double reflectivity_mean;
  double rcs_mean;  // radar amplitude level
  std::array<double, 3> appearance_base;
};

struct GenConfig {
  double map_length = 150.0;
  double map_width = 100.0;
  double map_chamfer = 8.0;
  int lane_count = 4;
  double lane_spacing = 3.5;

  int actor_count_min = 4;
  int actor_count_max = 10;
  std::array<double, 3> class_probs{0.4, 0.3, 0.3};

  // Class-conditional extent ranges are a generator contract (see Actor
  // invariants); speeds and sensor signatures are tunable.
  std::array<ClassParams, 3> classes{{
      // vehicle
      {3.5, 6.0, 2.0, 8.0, 0.10, 0.75, 0.85, {0.75, 0.15, 0.15}},
      // pedestrian
      {0.4, 0.8, 0.4, 1.8, 0.40, 0.25, 0.20, {0.15, 0.70, 0.15}},
      // bicyclist
      {1.5, 2.2, 1.5, 5.0, 0.25, 0.50, 0.45, {0.15, 0.15, 0.75}},
  }};
  double reflectivity_sigma = 0.08;
  double rcs_sigma = 0.10;
  double appearance_jitter = 0.10;

  double sdv_speed_min = 0.0;
  double sdv_speed_max = 5.0;
  double sdv_clearance = 3.0;  // actors keep this distance from the SDV at t=0

  int lidar_rays = 720;
  double lidar_max_range = 120.0;
  double lidar_noise_sigma = 0.03;
  double wall_reflectivity = 0.30;

  int radar_returns_min = 1;
  int radar_returns_max = 8;
  double radar_pos_sigma = 0.5;   // larger than LiDAR by design
  double radar_vel_sigma = 0.3;

  double camera_fov_half = geom::kPi / 4.0;  // +/-45 deg about SDV heading
  int camera_resolution = 256;
  double camera_noise_sigma = 0.05;
  std::array<double, 3> background_color{0.55, 0.55, 0.55};

  double duration_s = 4.0;
  int placement_retries = 200;
};

struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {
// Stream ids for per-sensor noise; frames at different timestamps get
// independent substreams so renders are order-independent.
constexpr uint64_t kStreamScene = 1;
constexpr uint64_t kStreamLidar = 2;
constexpr uint64_t kStreamRadar = 3;
constexpr uint64_t kStreamCamera = 4;

inline uint64_t frame_index(double t_s) {
  return static_cast<uint64_t>(std::llround(t_s * 10.0));
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Kinematics

/// Advances an actor by dt under the constant speed / constant turn-rate
/// model. Exact (closed-form) integration, so stepping is composable.
inline Actor step_actor(const Actor& actor, double dt_s) {
  if (dt_s <= 0.0) throw std::invalid_argument("step_actor: dt_s must be > 0");
  Actor out = actor;
  const double w = actor.turn_rate;
  const double theta = w * dt_s;
  const geom::Vec2 v = actor.velocity;
  geom::Vec2 delta;
  if (std::abs(w) < 1e-12) {
    delta = v * dt_s;
  } else {
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    delta = {(s * v.x - (1.0 - c) * v.y) / w, ((1.0 - c) * v.x + s * v.y) / w};
  }
  out.pose.x += delta.x;
  out.pose.y += delta.y;
  out.pose.heading = geom::wrap_angle(actor.pose.heading + theta);
  out.velocity = geom::rotate(v, theta);
  return out;
}

/// Actor state at absolute scene time t (t = 0 returns the stored state).
inline Actor actor_at(const Actor& actor, double t_s) {
  if (t_s <= 0.0) return actor;
  return step_actor(actor, t_s);
}

inline geom::Pose sdv_pose_at(const Scene& scene, double t_s) {
  Actor sdv;
  sdv.pose = scene.sdv_pose;
  sdv.velocity = scene.sdv_velocity;
  sdv.turn_rate = scene.sdv_turn_rate;
  const Actor moved = actor_at(sdv, t_s);
  return moved.pose;
}

// ---------------------------------------------------------------------------
// Scene generation

namespace detail {

inline std::vector<geom::Vec2> make_drivable_area(const GenConfig& cfg) {
  const double hl = 0.5 * cfg.map_length;
  const double hw = 0.5 * cfg.map_width;
  const double c = std::min(cfg.map_chamfer, std::min(hl, hw) * 0.5);
  // chamfered rectangle, CCW
  return {{hl, -hw + c}, {hl, hw - c},  {hl - c, hw},  {-hl + c, hw},
          {-hl, hw - c}, {-hl, -hw + c}, {-hl + c, -hw}, {hl - c, -hw}};
}

inline std::vector<std::vector<geom::Vec2>> make_lanes(const GenConfig& cfg) {
  std::vector<std::vector<geom::Vec2>> lanes;
  const double x0 = -0.45 * cfg.map_length;
  const double x1 = 0.45 * cfg.map_length;
  const double y0 = -0.5 * cfg.lane_spacing * (cfg.lane_count - 1);
  for (int i = 0; i < cfg.lane_count; ++i) {
    const double y = y0 + i * cfg.lane_spacing;
    lanes.push_back({{x0, y}, {x1, y}});
  }
  return lanes;
}

inline bool inside_with_margin(const geom::Vec2& p, const std::vector<geom::Vec2>& poly,
                               double margin) {
  if (!geom::point_in_polygon(p, poly)) return false;
  for (size_t i = 0; i < poly.size(); ++i) {
    const geom::Vec2& a = poly[i];
    const geom::Vec2& b = poly[(i + 1) % poly.size()];
    if (geom::point_segment_distance(p, a, b) < margin) return false;
  }
  return true;
}

}  // namespace detail

/// Deterministic scene sampler: same (config, seed) gives a bit-identical
/// scene. Throws GenerationError when the map cannot fit the requested
/// actor count without overlap within the retry budget.
inline Scene sample_scene(const GenConfig& cfg, uint64_t seed) {
  Rng rng = Rng::derive(seed, detail::kStreamScene);
  Scene scene;
  scene.seed = seed;
  scene.duration_s = cfg.duration_s;
  scene.sample_rate_hz = 10.0;
  scene.map.drivable_area = detail::make_drivable_area(cfg);
  scene.map.lane_centerlines = detail::make_lanes(cfg);

  scene.sdv_pose = {0.0, 0.0, 0.0};
  const double sdv_speed = rng.next_uniform(cfg.sdv_speed_min, cfg.sdv_speed_max);
  scene.sdv_velocity = {sdv_speed, 0.0};
  scene.sdv_turn_rate = 0.0;

  const int n = rng.next_int(cfg.actor_count_min, cfg.actor_count_max);
  scene.actors.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    // class draw
    const double u = rng.next_double();
    int ci = 0;
    double acc = 0.0;
    for (int k = 0; k < kNumClasses; ++k) {
      acc += cfg.class_probs[static_cast<size_t>(k)];
      if (u < acc) { ci = k; break; }
      ci = k;
    }
    const ClassParams& cp = cfg.classes[static_cast<size_t>(ci)];

    Actor a;
    a.id = i;
    a.cls = static_cast<ActorClass>(ci);
    a.length = rng.next_uniform(cp.length_min, cp.length_max);
    switch (a.cls) {
      case ActorClass::kVehicle:
        a.width = std::clamp(a.length * 0.42, 1.5, 2.3);
        break;
      case ActorClass::kPedestrian:
        a.width = a.length * rng.next_uniform(0.8, 1.0);
        break;
      case ActorClass::kBicyclist:
        a.width = rng.next_uniform(0.5, 0.7);
        break;
    }
    a.reflectivity = std::clamp(
        rng.next_gaussian(cp.reflectivity_mean, cfg.reflectivity_sigma), 0.0, 1.0);
    for (int ch = 0; ch < 3; ++ch) {
      a.appearance[static_cast<size_t>(ch)] = std::clamp(
          cp.appearance_base[static_cast<size_t>(ch)] +
              rng.next_uniform(-cfg.appearance_jitter, cfg.appearance_jitter),
          0.0, 1.0);
    }
    const double speed = rng.next_uniform(cp.speed_min, cp.speed_max);
    a.turn_rate = rng.next_uniform(-cp.turn_rate_max, cp.turn_rate_max);

    bool placed = false;
    for (int attempt = 0; attempt < cfg.placement_retries && !placed; ++attempt) {
      const bool on_lane = (a.cls == ActorClass::kVehicle) && cfg.lane_count > 0;
      geom::Vec2 pos;
      double heading;
      if (on_lane) {
        const int li = rng.next_int(0, cfg.lane_count - 1);
        const double lane_y =
            -0.5 * cfg.lane_spacing * (cfg.lane_count - 1) + li * cfg.lane_spacing;
        pos = {rng.next_uniform(-0.45 * cfg.map_length, 0.45 * cfg.map_length),
               lane_y + rng.next_gaussian(0.0, 0.4)};
        heading = (rng.next_double() < 0.5 ? 0.0 : geom::kPi) +
                  rng.next_gaussian(0.0, 0.05);
      } else {
        pos = {rng.next_uniform(-0.48 * cfg.map_length, 0.48 * cfg.map_length),
               rng.next_uniform(-0.48 * cfg.map_width, 0.48 * cfg.map_width)};
        heading = rng.next_uniform(-geom::kPi, geom::kPi);
      }
      heading = geom::wrap_angle(heading);

      const double margin = 0.5 * std::hypot(a.length, a.width) + 0.3;
      if (!detail::inside_with_margin(pos, scene.map.drivable_area, margin)) continue;
      if (pos.norm() < cfg.sdv_clearance + 0.5 * a.length) continue;
      // keep the actor in frame for the first second of motion
      const geom::Vec2 vel = geom::rotate({speed, 0.0}, heading);
      if (!detail::inside_with_margin(pos + vel * 1.0, scene.map.drivable_area,
                                      margin * 0.5)) {
        continue;
      }

      a.pose = {pos.x, pos.y, heading};
      a.velocity = vel;
      const geom::OrientedBox candidate = a.box();
      bool overlaps = false;
      for (const Actor& other : scene.actors) {
        if (geom::intersection_area(candidate, other.box()) > 1e-9) {
          overlaps = true;
          break;
        }
      }
      if (!overlaps) placed = true;
    }
    if (!placed) {
      throw GenerationError("sample_scene: could not place actor " +
                            std::to_string(i) + " without overlap (seed " +
                            std::to_string(seed) + ")");
    }
    scene.actors.push_back(a);
  }
  return scene;
}

// ---------------------------------------------------------------------------
// Sensor rendering

/// Casts `lidar_rays` azimuth rays from the SDV; each ray keeps its first hit
/// against actor boundaries or the drivable-area boundary (single-return,
/// occlusion-respecting). Points are in the SDV frame at t_s.
inline LidarSweep render_lidar(const Scene& scene, double t_s, const GenConfig& cfg) {
  if (t_s < -1e-9 || t_s > scene.duration_s + 1e-9) {
    throw std::out_of_range("render_lidar: t_s outside scene duration");
  }
  Rng rng = Rng::derive(scene.seed, detail::kStreamLidar, detail::frame_index(t_s));
  const geom::Pose sdv = sdv_pose_at(scene, t_s);

  std::vector<std::array<geom::Vec2, 4>> actor_corners;
  actor_corners.reserve(scene.actors.size());
  for (const Actor& a : scene.actors) {
    actor_corners.push_back(actor_at(a, t_s).box().corners());
  }

  LidarSweep sweep;
  sweep.timestamp_s = t_s;
  sweep.azimuth_bin_count = cfg.lidar_rays;
  sweep.points.reserve(static_cast<size_t>(cfg.lidar_rays));

  const auto& wall = scene.map.drivable_area;
  for (int i = 0; i < cfg.lidar_rays; ++i) {
    const double az = -geom::kPi + (i + 0.5) * (2.0 * geom::kPi / cfg.lidar_rays);
    const geom::Vec2 dir = geom::rotate({1.0, 0.0}, sdv.heading + az);
    double best = cfg.lidar_max_range;
    int hit_id = -2;  // no hit
    for (size_t ai = 0; ai < actor_corners.size(); ++ai) {
      const auto& c = actor_corners[ai];
      for (int e = 0; e < 4; ++e) {
        const auto t = geom::ray_segment(sdv.position(), dir, c[static_cast<size_t>(e)],
                                         c[static_cast<size_t>((e + 1) % 4)]);
        if (t && *t > 1e-9 && *t < best) {
          best = *t;
          hit_id = scene.actors[ai].id;
        }
      }
    }
    for (size_t e = 0; e < wall.size(); ++e) {
      const auto t = geom::ray_segment(sdv.position(), dir, wall[e],
                                       wall[(e + 1) % wall.size()]);
      if (t && *t > 1e-9 && *t < best) {
        best = *t;
        hit_id = -1;
      }
    }
    if (hit_id == -2) continue;  // nothing in range on this ray

    double base = cfg.wall_reflectivity;
    if (hit_id >= 0) base = scene.actors[static_cast<size_t>(hit_id)].reflectivity;
    const double intensity =
        std::clamp(base + rng.next_gaussian(0.0, cfg.lidar_noise_sigma), 0.0, 1.0);
    const geom::Vec2 local = geom::rotate({best, 0.0}, az);
    sweep.points.push_back({local.x, local.y, intensity});
    sweep.hit_actor_ids.push_back(hit_id);
  }
  return sweep;
}

namespace detail {

/// True when the segment SDV->actor-center is blocked by another actor
/// or by the map boundary.
inline bool actor_occluded(const Scene& scene, const geom::Pose& sdv,
                           const std::vector<std::array<geom::Vec2, 4>>& corners,
                           size_t target) {
  const geom::Vec2 tgt{(corners[target][0].x + corners[target][2].x) * 0.5,
                       (corners[target][0].y + corners[target][2].y) * 0.5};
  for (size_t ai = 0; ai < corners.size(); ++ai) {
    if (ai == target) continue;
    for (int e = 0; e < 4; ++e) {
      if (geom::segments_intersect(sdv.position(), tgt, corners[ai][static_cast<size_t>(e)],
                                   corners[ai][static_cast<size_t>((e + 1) % 4)])) {
        return true;
      }
    }
  }
  const auto& wall = scene.map.drivable_area;
  for (size_t e = 0; e < wall.size(); ++e) {
    if (geom::segments_intersect(sdv.position(), tgt, wall[e],
                                 wall[(e + 1) % wall.size()])) {
      return true;
    }
  }
  return false;
}

inline geom::Vec2 sample_boundary_point(const geom::OrientedBox& box, Rng& rng) {
  const auto c = box.corners();
  double perim = 0.0;
  std::array<double, 4> lens{};
  for (int e = 0; e < 4; ++e) {
    lens[static_cast<size_t>(e)] =
        (c[static_cast<size_t>((e + 1) % 4)] - c[static_cast<size_t>(e)]).norm();
    perim += lens[static_cast<size_t>(e)];
  }
  double s = rng.next_double() * perim;
  for (int e = 0; e < 4; ++e) {
    if (s <= lens[static_cast<size_t>(e)] || e == 3) {
      const double f = lens[static_cast<size_t>(e)] > 0.0
                           ? std::min(1.0, s / lens[static_cast<size_t>(e)])
                           : 0.0;
      const geom::Vec2 a = c[static_cast<size_t>(e)];
      const geom::Vec2 b = c[static_cast<size_t>((e + 1) % 4)];
      return a + (b - a) * f;
    }
    s -= lens[static_cast<size_t>(e)];
  }
  return c[0];
}

}  // namespace detail

/// Noisy boundary returns with ego-motion-compensated radial velocity
/// (projection of the actor's world velocity onto the line of sight;
/// negative = approaching). Returns are in the SDV frame at t_s.
inline RadarSweep render_radar(const Scene& scene, double t_s, const GenConfig& cfg) {
  if (t_s < -1e-9 || t_s > scene.duration_s + 1e-9) {
    throw std::out_of_range("render_radar: t_s outside scene duration");
  }
  Rng rng = Rng::derive(scene.seed, detail::kStreamRadar, detail::frame_index(t_s));
  const geom::Pose sdv = sdv_pose_at(scene, t_s);

  std::vector<std::array<geom::Vec2, 4>> corners;
  std::vector<Actor> stepped;
  corners.reserve(scene.actors.size());
  for (const Actor& a : scene.actors) {
    stepped.push_back(actor_at(a, t_s));
    corners.push_back(stepped.back().box().corners());
  }

  RadarSweep sweep;
  sweep.timestamp_s = t_s;
  for (size_t ai = 0; ai < stepped.size(); ++ai) {
    if (detail::actor_occluded(scene, sdv, corners, ai)) continue;
    const Actor& a = stepped[ai];
    const ClassParams& cp = cfg.classes[static_cast<size_t>(a.cls)];
    const int k = rng.next_int(cfg.radar_returns_min, cfg.radar_returns_max);
    for (int r = 0; r < k; ++r) {
      geom::Vec2 p = detail::sample_boundary_point(a.box(), rng);
      p.x += rng.next_gaussian(0.0, cfg.radar_pos_sigma);
      p.y += rng.next_gaussian(0.0, cfg.radar_pos_sigma);
      const geom::Vec2 los = p - sdv.position();
      const double d = los.norm();
      const geom::Vec2 unit = d > 1e-9 ? los * (1.0 / d) : geom::Vec2{1.0, 0.0};
      const double rv =
          unit.dot(a.velocity) + rng.next_gaussian(0.0, cfg.radar_vel_sigma);
      const double amp =
          std::clamp(rng.next_gaussian(cp.rcs_mean, cfg.rcs_sigma), 0.0, 1.0);
      const geom::Vec2 local = sdv.to_local(p);
      sweep.returns.push_back({local.x, local.y, rv, amp});
      sweep.actor_ids.push_back(a.id);
    }
  }
  return sweep;
}

/// 1D front camera: one RGB pixel per azimuth bin inside the FOV, colored by
/// the nearest actor on that ray (background otherwise).
inline CameraImage render_camera(const Scene& scene, double t_s, const GenConfig& cfg) {
  if (t_s < -1e-9 || t_s > scene.duration_s + 1e-9) {
    throw std::out_of_range("render_camera: t_s outside scene duration");
  }
  Rng rng = Rng::derive(scene.seed, detail::kStreamCamera, detail::frame_index(t_s));
  const geom::Pose sdv = sdv_pose_at(scene, t_s);

  std::vector<std::array<geom::Vec2, 4>> corners;
  corners.reserve(scene.actors.size());
  for (const Actor& a : scene.actors) corners.push_back(actor_at(a, t_s).box().corners());

  CameraImage img;
  img.timestamp_s = t_s;
  img.fov_min = -cfg.camera_fov_half;
  img.fov_max = cfg.camera_fov_half;
  img.pixels.resize(static_cast<size_t>(cfg.camera_resolution));

  const double span = img.fov_max - img.fov_min;
  for (int px = 0; px < cfg.camera_resolution; ++px) {
    const double az = img.fov_min + (px + 0.5) * span / cfg.camera_resolution;
    const geom::Vec2 dir = geom::rotate({1.0, 0.0}, sdv.heading + az);
    double best = cfg.lidar_max_range;
    int hit = -1;
    for (size_t ai = 0; ai < corners.size(); ++ai) {
      for (int e = 0; e < 4; ++e) {
        const auto t =
            geom::ray_segment(sdv.position(), dir, corners[ai][static_cast<size_t>(e)],
                              corners[ai][static_cast<size_t>((e + 1) % 4)]);
        if (t && *t > 1e-9 && *t < best) {
          best = *t;
          hit = static_cast<int>(ai);
        }
      }
    }
    std::array<double, 3> color = cfg.background_color;
    if (hit >= 0) color = scene.actors[static_cast<size_t>(hit)].appearance;
    for (int ch = 0; ch < 3; ++ch) {
      img.pixels[static_cast<size_t>(px)][static_cast<size_t>(ch)] = std::clamp(
          color[static_cast<size_t>(ch)] + rng.next_gaussian(0.0, cfg.camera_noise_sigma),
          0.0, 1.0);
    }
  }
  return img;
}

// ---------------------------------------------------------------------------
// Labels and frames

/// One label per actor at t_s, in the SDV frame at t_s, with a 3 s future
/// rolled out at 0.1 s resolution. in_fov uses [fov_min, fov_max) membership
/// of the box-center azimuth.
inline std::vector<GroundTruthLabel> ground_truth_labels(const Scene& scene, double t_s,
                                                         const GenConfig& cfg) {
  if (t_s < -1e-9 || t_s + kFutureSteps * kFutureDt > scene.duration_s + 1e-9) {
    throw std::out_of_range("ground_truth_labels: 3 s horizon exceeds scene duration");
  }
  const geom::Pose sdv = sdv_pose_at(scene, t_s);
  const LidarSweep sweep = render_lidar(scene, t_s, cfg);

  std::vector<GroundTruthLabel> labels;
  labels.reserve(scene.actors.size());
  for (const Actor& actor : scene.actors) {
    GroundTruthLabel lab;
    lab.actor_id = actor.id;
    lab.cls = actor.cls;
    Actor cur = actor_at(actor, t_s);
    const geom::Vec2 local_center = sdv.to_local({cur.pose.x, cur.pose.y});
    lab.box = {local_center, geom::wrap_angle(cur.pose.heading - sdv.heading),
               cur.length, cur.width};

    Actor roll = cur;
    for (int i = 0; i < kFutureSteps; ++i) {
      roll = step_actor(roll, kFutureDt);
      lab.future[static_cast<size_t>(i)] = sdv.to_local({roll.pose.x, roll.pose.y});
    }

    const double az = std::atan2(local_center.y, local_center.x);
    lab.in_fov = az >= -cfg.camera_fov_half && az < cfg.camera_fov_half;

    lab.num_lidar_hits = 0;
    for (int id : sweep.hit_actor_ids) {
      if (id == actor.id) ++lab.num_lidar_hits;
    }
    labels.push_back(lab);
  }
  return labels;
}

constexpr int kLidarHistory = 10;
constexpr int kRadarHistory = 3;

namespace detail {

inline LidarSweep transform_sweep(const LidarSweep& sweep, const geom::Pose& from,
                                  const geom::Pose& to) {
  LidarSweep out = sweep;
  for (auto& p : out.points) {
    const geom::Vec2 world = from.to_world({p.x, p.y});
    const geom::Vec2 local = to.to_local(world);
    p.x = local.x;
    p.y = local.y;
  }
  return out;
}

inline RadarSweep transform_sweep(const RadarSweep& sweep, const geom::Pose& from,
                                  const geom::Pose& to) {
  RadarSweep out = sweep;
  for (auto& r : out.returns) {
    const geom::Vec2 world = from.to_world({r.x, r.y});
    const geom::Vec2 local = to.to_local(world);
    r.x = local.x;
    r.y = local.y;
  }
  return out;
}

}  // namespace detail

inline MapGeometry map_in_sdv_frame(const Scene& scene, double t_s) {
  const geom::Pose sdv = sdv_pose_at(scene, t_s);
  MapGeometry out;
  out.drivable_area.reserve(scene.map.drivable_area.size());
  for (const auto& v : scene.map.drivable_area) out.drivable_area.push_back(sdv.to_local(v));
  for (const auto& lane : scene.map.lane_centerlines) {
    std::vector<geom::Vec2> l;
    l.reserve(lane.size());
    for (const auto& v : lane) l.push_back(sdv.to_local(v));
    out.lane_centerlines.push_back(std::move(l));
  }
  return out;
}

/// Assembles the model input sample at t_s: the 10 most recent LiDAR sweeps
/// and 3 most recent radar sweeps re-expressed in the SDV frame at t_s, the
/// current camera image, labels, and the SDV-frame map.
inline SensorFrame build_frame(const Scene& scene, double t_s, const GenConfig& cfg) {
  const double dt = 1.0 / scene.sample_rate_hz;
  if (t_s + 1e-9 < (kLidarHistory - 1) * dt) {
    throw std::out_of_range("build_frame: needs 10 past LiDAR sweeps (t_s >= 0.9)");
  }
  if (t_s + kFutureSteps * kFutureDt > scene.duration_s + 1e-9) {
    throw std::out_of_range("build_frame: 3 s future exceeds scene duration");
  }

  const geom::Pose ref = sdv_pose_at(scene, t_s);
  SensorFrame frame;
  frame.timestamp_s = t_s;
  frame.scene_seed = scene.seed;

  for (int i = kLidarHistory - 1; i >= 0; --i) {
    const double t = t_s - i * dt;
    const LidarSweep sweep = render_lidar(scene, t, cfg);
    frame.lidar_sweeps.push_back(
        detail::transform_sweep(sweep, sdv_pose_at(scene, t), ref));
  }
  for (int i = kRadarHistory - 1; i >= 0; --i) {
    const double t = t_s - i * dt;
    const RadarSweep sweep = render_radar(scene, t, cfg);
    frame.radar_sweeps.push_back(
        detail::transform_sweep(sweep, sdv_pose_at(scene, t), ref));
  }
  frame.camera = render_camera(scene, t_s, cfg);
  frame.labels = ground_truth_labels(scene, t_s, cfg);
  frame.map = map_in_sdv_frame(scene, t_s);
  return frame;
}

}  // namespace msd::sim

#endif  // MSD_WORLDSIM_HPP
