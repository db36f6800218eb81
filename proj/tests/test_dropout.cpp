#include <doctest.h>

#include <cmath>

#include "msd/dropout.hpp"
#include "msd/worldsim.hpp"

using namespace msd;

namespace {

sim::SensorFrame frame_with_intensities(const std::vector<double>& intensities) {
  sim::SensorFrame frame;
  sim::LidarSweep sweep;
  for (double v : intensities) {
    sweep.points.push_back({1.0, 2.0, v});
    sweep.hit_actor_ids.push_back(-1);
  }
  frame.lidar_sweeps.push_back(sweep);
  return frame;
}

}  // namespace

TEST_CASE("compute_sentinel") {
  SUBCASE("mean of {0.2, 0.4, 0.6} is 0.4") {
    const auto frames = std::vector<sim::SensorFrame>{
        frame_with_intensities({0.2, 0.4, 0.6})};
    CHECK(drop::compute_sentinel(frames) == doctest::Approx(0.4));
  }
  SUBCASE("all zeros give zero") {
    const auto frames = std::vector<sim::SensorFrame>{
        frame_with_intensities({0.0, 0.0, 0.0, 0.0})};
    CHECK(drop::compute_sentinel(frames) == 0.0);
  }
  SUBCASE("empty dataset is a contract error") {
    std::vector<sim::SensorFrame> frames;
    CHECK_THROWS_AS((void)drop::compute_sentinel(frames), std::invalid_argument);
    frames.push_back(frame_with_intensities({}));
    CHECK_THROWS_AS((void)drop::compute_sentinel(frames), std::invalid_argument);
  }
  SUBCASE("matches an independent streaming mean over generated scenes") {
    sim::GenConfig cfg;
    cfg.map_length = 60.0;
    cfg.map_width = 40.0;
    cfg.actor_count_min = 2;
    cfg.actor_count_max = 5;
    cfg.lidar_rays = 240;
    std::vector<sim::SensorFrame> frames;
    for (uint64_t seed = 0; seed < 20; ++seed) {
      frames.push_back(sim::build_frame(sim::sample_scene(cfg, seed), 0.9, cfg));
    }
    // streaming (Welford-style) mean, an independent route
    double mean = 0.0;
    long long n = 0;
    for (const auto& f : frames) {
      for (const auto& s : f.lidar_sweeps) {
        for (const auto& p : s.points) {
          ++n;
          mean += (p.intensity - mean) / static_cast<double>(n);
        }
      }
    }
    REQUIRE(n > 1000);
    CHECK(drop::compute_sentinel(frames) == doctest::Approx(mean).epsilon(1e-9));
  }
}

TEST_CASE("sample_mask") {
  SUBCASE("p = 0 never drops; p = 1 always drops") {
    Rng rng(3);
    drop::DropoutConfig zero;
    zero.p_camera = zero.p_radar = zero.p_intensity = 0.0;
    drop::DropoutConfig one;
    one.p_camera = one.p_radar = one.p_intensity = 1.0;
    for (int i = 0; i < 200; ++i) {
      const auto mz = drop::sample_mask(zero, rng);
      CHECK(!mz.drop_camera);
      CHECK(!mz.drop_radar);
      CHECK(!mz.drop_intensity);
      const auto mo = drop::sample_mask(one, rng);
      CHECK(mo.drop_camera);
      CHECK(mo.drop_radar);
      CHECK(mo.drop_intensity);
    }
  }

  SUBCASE("empirical rate within a 3-sigma binomial bound at p = 0.2") {
    Rng rng(1001);
    drop::DropoutConfig cfg;  // defaults 0.2 / 0.2 / 0.1
    const int n = 100000;
    long cam = 0, rad = 0, inten = 0;
    for (int i = 0; i < n; ++i) {
      const auto m = drop::sample_mask(cfg, rng);
      cam += m.drop_camera;
      rad += m.drop_radar;
      inten += m.drop_intensity;
    }
    const double cam_rate = static_cast<double>(cam) / n;
    CHECK(cam_rate >= 0.196);
    CHECK(cam_rate <= 0.204);
    const double rad_rate = static_cast<double>(rad) / n;
    CHECK(rad_rate >= 0.196);
    CHECK(rad_rate <= 0.204);
    const double int_rate = static_cast<double>(inten) / n;
    CHECK(int_rate >= 0.0972);  // 3 sigma around 0.1
    CHECK(int_rate <= 0.1028);
  }

  SUBCASE("pairwise drop indicators are uncorrelated within 3 sigma") {
    Rng rng(2002);
    drop::DropoutConfig cfg;
    cfg.p_camera = cfg.p_radar = cfg.p_intensity = 0.3;
    const int n = 100000;
    double sum_c = 0, sum_r = 0, sum_i = 0, cr = 0, ci = 0, ri = 0;
    for (int k = 0; k < n; ++k) {
      const auto m = drop::sample_mask(cfg, rng);
      sum_c += m.drop_camera;
      sum_r += m.drop_radar;
      sum_i += m.drop_intensity;
      cr += m.drop_camera * m.drop_radar;
      ci += m.drop_camera * m.drop_intensity;
      ri += m.drop_radar * m.drop_intensity;
    }
    const auto corr = [&](double sxy, double sx, double sy) {
      const double mx = sx / n, my = sy / n;
      const double cov = sxy / n - mx * my;
      return cov / std::sqrt(mx * (1 - mx) * my * (1 - my));
    };
    const double bound = 3.0 / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(corr(cr, sum_c, sum_r)) < bound);
    CHECK(std::abs(corr(ci, sum_c, sum_i)) < bound);
    CHECK(std::abs(corr(ri, sum_r, sum_i)) < bound);
  }

  SUBCASE("invalid probabilities rejected") {
    Rng rng(1);
    drop::DropoutConfig bad;
    bad.p_camera = 1.5;
    CHECK_THROWS_AS((void)drop::sample_mask(bad, rng), std::invalid_argument);
  }
}

TEST_CASE("mask_for_eval is deterministic and consumes no randomness") {
  CHECK(drop::mask_for_eval(drop::EvalMode::kFull) ==
        drop::ModalityMask{false, false, false});
  CHECK(drop::mask_for_eval(drop::EvalMode::kMinusCamera) ==
        drop::ModalityMask{true, false, false});
  CHECK(drop::mask_for_eval(drop::EvalMode::kMinusRadar) ==
        drop::ModalityMask{false, true, false});
  CHECK(drop::mask_for_eval(drop::EvalMode::kMinusIntensity) ==
        drop::ModalityMask{false, false, true});
}

TEST_CASE("apply_feature_dropout") {
  Tensor cam({4, 8});
  Tensor rad({6, 4, 5});
  for (size_t i = 0; i < cam.raw().size(); ++i) cam.raw()[i] = 0.1 * (1.0 + i);
  for (size_t i = 0; i < rad.raw().size(); ++i) rad.raw()[i] = -0.2 * (1.0 + i);

  SUBCASE("all-false mask is the identity") {
    const auto [c, r] = drop::apply_feature_dropout(cam, rad, {});
    CHECK(c.raw() == cam.raw());
    CHECK(r.raw() == rad.raw());
  }
  SUBCASE("dropping camera zeroes exactly the camera tensor") {
    const auto [c, r] = drop::apply_feature_dropout(cam, rad, {true, false, false});
    for (double v : c.raw()) CHECK(v == 0.0);
    CHECK(r.raw() == rad.raw());
  }
  SUBCASE("dropping radar zeroes exactly the radar tensor") {
    const auto [c, r] = drop::apply_feature_dropout(cam, rad, {false, true, false});
    CHECK(c.raw() == cam.raw());
    for (double v : r.raw()) CHECK(v == 0.0);
  }
}

TEST_CASE("apply_input_dropout") {
  sim::CameraImage img;
  img.pixels = {{0.1, 0.2, 0.3}, {0.9, 0.8, 0.7}};

  SUBCASE("no drop: identity") {
    const auto out = drop::apply_input_dropout(img, {});
    CHECK(out.pixels == img.pixels);
  }
  SUBCASE("drop: all pixels zero, and any two images agree") {
    const auto a = drop::apply_input_dropout(img, {true, false, false});
    for (const auto& px : a.pixels) {
      CHECK(px[0] == 0.0);
      CHECK(px[1] == 0.0);
      CHECK(px[2] == 0.0);
    }
    sim::CameraImage other;
    other.pixels = {{0.4, 0.4, 0.4}, {0.2, 0.1, 0.6}};
    const auto b = drop::apply_input_dropout(other, {true, false, false});
    CHECK(a.pixels == b.pixels);
  }
}

TEST_CASE("apply_intensity_dropout replaces intensities and leaves positions") {
  std::vector<sim::LidarSweep> sweeps(2);
  sweeps[0].points = {{1.0, 2.0, 0.1}, {3.0, 4.0, 0.9}};
  sweeps[1].points = {{-1.0, 0.5, 0.5}};
  const auto same = drop::apply_intensity_dropout(sweeps, {}, 0.37);
  CHECK(same[0].points[0].intensity == 0.1);
  const auto dropped =
      drop::apply_intensity_dropout(sweeps, {false, false, true}, 0.37);
  for (const auto& s : dropped) {
    for (const auto& p : s.points) CHECK(p.intensity == 0.37);
  }
  CHECK(dropped[0].points[0].x == 1.0);
  CHECK(dropped[0].points[0].y == 2.0);
  CHECK(dropped[1].points[0].x == -1.0);
}
