#include <cmath>
#include <random>

#include "doctest.h"
#include "trisim/vision.hpp"

using namespace trisim;

namespace {

CameraConfig front_camera() {
  CameraConfig c;
  c.focal_px = 484.97;
  c.mount = CameraMount::kFront;
  return c;
}

PixelObservation seen(double u) { return {0, u, true}; }

}  // namespace

TEST_SUITE("vision") {
  TEST_CASE("focal length for the default disparity") { CHECK(focal_for_disparity(280.0) == doctest::Approx(484.97).epsilon(1e-4)); }

  TEST_CASE("projection of a beacon 30 degrees off axis") {
    const PixelObservation o = project_marker(Pose2D(0, 0, 0), front_camera(), {1.29904, 0.75});
    CHECK(o.visible);
    // Oracle: X/Z = tan(30 deg).
    CHECK(o.u == std::round(320.0 + 484.97 * std::tan(std::numbers::pi / 6.0)));
    CHECK(o.u == 600.0);
  }

  TEST_CASE("on-axis target projects to the principal point") {
    for (double depth : {0.3, 1.0, 4.5}) {
      const PixelObservation o = project_marker(Pose2D(1, 2, 0.7), front_camera(), Vec2{1, 2} + heading_vector(0.7) * depth);
      CHECK(o.visible);
      CHECK(o.u == 320.0);
    }
  }

  TEST_CASE("target behind the camera is invisible") {
    CHECK_FALSE(project_marker(Pose2D(0, 0, 0), front_camera(), {-1.0, 0.1}).visible);
    CHECK_FALSE(project_marker(Pose2D(0, 0, 0), front_camera(), {10.0, 0.0}).visible);  // beyond max_range
  }

  TEST_CASE("rear mount looks against the heading") {
    CameraConfig c = front_camera();
    c.mount = CameraMount::kRear;
    CHECK(project_marker(Pose2D(0, 0, 0), c, {-1.0, 0.0}).visible);
    CHECK_FALSE(project_marker(Pose2D(0, 0, 0), c, {1.0, 0.0}).visible);
  }

  TEST_CASE("lateral distance examples") {
    const LateralDistances a = lateral_distances(seen(320), seen(40), seen(600), 280);
    CHECK(a.d_m1 == 280.0);
    CHECK(a.d_m2 == 280.0);
    const LateralDistances b = lateral_distances(seen(320), seen(100), seen(600), 280);
    CHECK(b.d_m1 == 220.0);
    CHECK(b.d_m2 == 280.0);
    CHECK(lateral_distances(seen(320), seen(320), seen(600), 280).d_m1 == 0.0);
  }

  TEST_CASE("invisible marker raises a visibility error") {
    CHECK_THROWS_AS(lateral_distances(seen(320), {0, 0, false}, seen(600), 280), VisibilityError);
  }

  TEST_CASE("apex of a formed triangle sees both side beacons at d_t") {
    // Rear camera at the apex facing away from the opposite beacon.
    const Vec2 a{0, 0};
    const Vec2 b{1.5, 0};
    const Vec2 opp{0.75, -1.299038105676658};
    const Vec2 apex{0.75, 1.299038105676658};
    CameraConfig cam;
    cam.quantize = false;
    const Pose2D pose(apex, std::numbers::pi / 2.0);
    const auto c = project_marker(pose, cam, opp);
    const auto l = project_marker(pose, cam, a);
    const auto r = project_marker(pose, cam, b);
    REQUIRE((c.visible && l.visible && r.visible));
    const LateralDistances d = lateral_distances(c, l, r, 280);
    CHECK(d.d_m1 == doctest::Approx(280.0).epsilon(1e-9));
    CHECK(d.d_m2 == doctest::Approx(280.0).epsilon(1e-9));
    CHECK(c.u == doctest::Approx(320.0));
  }

  TEST_CASE("lateral offset unbalances the disparities") {
    const Vec2 a{0, 0};
    const Vec2 b{1.5, 0};
    const Vec2 opp{0.75, -1.299038105676658};
    CameraConfig cam;
    cam.quantize = false;
    // Displaced 0.1 m toward b, still facing straight away from the base.
    const Pose2D pose(Vec2{0.85, 1.299038105676658}, std::numbers::pi / 2.0);
    const LateralDistances d = lateral_distances(project_marker(pose, cam, opp), project_marker(pose, cam, a),
                                                 project_marker(pose, cam, b), 280);
    CHECK(d.d_m1 > d.d_m2);
  }

  TEST_CASE("disparities are invariant under rigid transforms of the scene") {
    std::mt19937_64 g(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const Vec2 a{0, 0};
    const Vec2 b{1.5, 0};
    const Vec2 opp{0.75, -1.299038105676658};
    const Pose2D pose(Vec2{0.8, 1.4}, 1.5);
    const CameraConfig cam;
    auto measure = [&](auto tf, double dh) {
      const Pose2D p(tf(pose.position()), pose.heading() + dh);
      return lateral_distances(project_marker(p, cam, tf(opp)), project_marker(p, cam, tf(a)),
                               project_marker(p, cam, tf(b)), 280);
    };
    const LateralDistances ref = measure([](Vec2 p) { return p; }, 0.0);
    for (int i = 0; i < 100; ++i) {
      const double ang = u(g);
      const Vec2 shift{u(g), u(g)};
      const LateralDistances d = measure([&](Vec2 p) { return rotate(p, ang) + shift; }, ang);
      CHECK(std::abs(d.d_m1 - ref.d_m1) <= 1.0);
      CHECK(std::abs(d.d_m2 - ref.d_m2) <= 1.0);
    }
  }

  TEST_CASE("disparity grows as the camera approaches the beacons") {
    const Vec2 a{0, 0};
    const Vec2 b{1.5, 0};
    CameraConfig cam;
    cam.quantize = false;
    double prev = 0.0;
    for (double y = 3.0; y >= 0.8; y -= 0.2) {
      const Pose2D pose(Vec2{0.75, y}, std::numbers::pi / 2.0);
      const double span = project_marker(pose, cam, a).u - project_marker(pose, cam, b).u;
      CHECK(std::abs(span) > prev);
      prev = std::abs(span);
    }
  }

  TEST_CASE("camera config validation") {
    CameraConfig c;
    CHECK_NOTHROW(c.validate());
    c.focal_px = -1.0;
    CHECK_THROWS(c.validate());
  }
}
