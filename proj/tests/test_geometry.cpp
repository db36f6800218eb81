#include <doctest.h>

#include <cmath>

#include "msd/geometry.hpp"
#include "msd/rng.hpp"

using namespace msd;
using geom::OrientedBox;
using geom::Vec2;

namespace {

// independent point-in-polygon oracle: winding-number formulation
bool winding_inside(const Vec2& p, const std::vector<Vec2>& poly) {
  int wn = 0;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    if (a.y <= p.y) {
      if (b.y > p.y && (b - a).cross(p - a) > 0) ++wn;
    } else {
      if (b.y <= p.y && (b - a).cross(p - a) < 0) --wn;
    }
  }
  return wn != 0;
}

}  // namespace

TEST_CASE("wrap_angle maps into [-pi, pi)") {
  CHECK(geom::wrap_angle(0.0) == doctest::Approx(0.0));
  CHECK(geom::wrap_angle(geom::kPi) == doctest::Approx(-geom::kPi));
  CHECK(geom::wrap_angle(3.0 * geom::kPi) == doctest::Approx(-geom::kPi));
  CHECK(geom::wrap_angle(-geom::kPi / 2.0) == doctest::Approx(-geom::kPi / 2.0));
  Rng rng(42);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.next_uniform(-50.0, 50.0);
    const double w = geom::wrap_angle(a);
    CHECK(w >= -geom::kPi);
    CHECK(w < geom::kPi);
    CHECK(std::abs(std::sin(w) - std::sin(a)) < 1e-9);
    CHECK(std::abs(std::cos(w) - std::cos(a)) < 1e-9);
  }
}

TEST_CASE("pose round trip") {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    geom::Pose pose{rng.next_uniform(-10, 10), rng.next_uniform(-10, 10),
                    rng.next_uniform(-3, 3)};
    const Vec2 p{rng.next_uniform(-20, 20), rng.next_uniform(-20, 20)};
    const Vec2 back = pose.to_local(pose.to_world(p));
    CHECK(back.x == doctest::Approx(p.x).epsilon(1e-12));
    CHECK(back.y == doctest::Approx(p.y).epsilon(1e-12));
  }
}

TEST_CASE("oriented box corners and containment") {
  OrientedBox box{{1.0, 2.0}, 0.0, 4.0, 2.0};
  CHECK(box.contains({1.0, 2.0}));
  CHECK(box.contains({3.0, 3.0}));       // corner, inclusive
  CHECK(!box.contains({3.01, 2.0}));
  CHECK(box.area() == doctest::Approx(8.0));

  // rotation by pi/2 swaps the roles of the extents
  OrientedBox rot{{0.0, 0.0}, geom::kPi / 2.0, 4.0, 2.0};
  CHECK(rot.contains({0.0, 1.9}));
  CHECK(!rot.contains({1.9, 0.0}));
}

TEST_CASE("polygon clipping: identical squares") {
  OrientedBox a{{0, 0}, 0.0, 2.0, 2.0};
  CHECK(geom::intersection_area(a, a) == doctest::Approx(4.0));
}

TEST_CASE("polygon clipping: offset squares overlap 2, union 6") {
  OrientedBox a{{0, 0}, 0.0, 2.0, 2.0};
  OrientedBox b{{1, 0}, 0.0, 2.0, 2.0};
  CHECK(geom::intersection_area(a, b) == doctest::Approx(2.0));
}

TEST_CASE("polygon clipping: disjoint squares") {
  OrientedBox a{{0, 0}, 0.0, 2.0, 2.0};
  OrientedBox b{{5, 5}, 0.7, 2.0, 2.0};
  CHECK(geom::intersection_area(a, b) == doctest::Approx(0.0));
}

TEST_CASE("clip area against Monte-Carlo estimate on random boxes") {
  Rng rng(1234);
  for (int iter = 0; iter < 20; ++iter) {
    OrientedBox a{{rng.next_uniform(-1, 1), rng.next_uniform(-1, 1)},
                  rng.next_uniform(-3, 3), rng.next_uniform(0.5, 3.0),
                  rng.next_uniform(0.5, 3.0)};
    OrientedBox b{{rng.next_uniform(-1, 1), rng.next_uniform(-1, 1)},
                  rng.next_uniform(-3, 3), rng.next_uniform(0.5, 3.0),
                  rng.next_uniform(0.5, 3.0)};
    const double area = geom::intersection_area(a, b);
    // sample inside box a, count hits in b
    long hits = 0;
    const long samples = 200000;
    for (long s = 0; s < samples; ++s) {
      const Vec2 local{rng.next_uniform(-0.5, 0.5) * a.length,
                       rng.next_uniform(-0.5, 0.5) * a.width};
      const Vec2 p = a.center + geom::rotate(local, a.heading);
      if (b.contains(p)) ++hits;
    }
    const double mc = a.area() * static_cast<double>(hits) / samples;
    CHECK(area == doctest::Approx(mc).epsilon(0.05).scale(0.1));
  }
}

TEST_CASE("point_in_polygon agrees with a winding-number oracle") {
  Rng rng(99);
  std::vector<Vec2> poly{{2, 0}, {1.2, 1.6}, {-0.5, 2.0}, {-2.1, 0.4},
                         {-1.4, -1.7}, {0.8, -1.9}};
  for (int i = 0; i < 2000; ++i) {
    const Vec2 p{rng.next_uniform(-3, 3), rng.next_uniform(-3, 3)};
    CHECK(geom::point_in_polygon(p, poly) == winding_inside(p, poly));
  }
}

TEST_CASE("ray-segment intersection distances") {
  // ray east from origin, vertical segment at x = 5
  auto t = geom::ray_segment({0, 0}, {1, 0}, {5, -1}, {5, 1});
  REQUIRE(t.has_value());
  CHECK(*t == doctest::Approx(5.0));
  // misses
  CHECK(!geom::ray_segment({0, 0}, {1, 0}, {5, 1}, {5, 2}).has_value());
  // behind the origin
  CHECK(!geom::ray_segment({0, 0}, {1, 0}, {-5, -1}, {-5, 1}).has_value());
}

TEST_CASE("point-segment distance") {
  CHECK(geom::point_segment_distance({0, 1}, {-1, 0}, {1, 0}) == doctest::Approx(1.0));
  CHECK(geom::point_segment_distance({3, 0}, {-1, 0}, {1, 0}) == doctest::Approx(2.0));
  CHECK(geom::point_segment_distance({0, 0}, {0, 0}, {0, 0}) == doctest::Approx(0.0));
}

TEST_CASE("rng determinism and uniformity") {
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c = Rng::derive(5, 1), d = Rng::derive(5, 2);
  CHECK(c.next_u64() != d.next_u64());

  Rng u(17);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += u.next_double();
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));

  Rng g(23);
  double gs = 0.0, gs2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = g.next_gaussian();
    gs += x;
    gs2 += x * x;
  }
  CHECK(gs / n == doctest::Approx(0.0).epsilon(0.02).scale(1.0));
  CHECK(gs2 / n == doctest::Approx(1.0).epsilon(0.02));
}
