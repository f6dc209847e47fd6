#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "trisim/planner.hpp"

using namespace trisim;

namespace {

constexpr double kH = 1.299038105676658;
constexpr double kL = 1.5;

std::vector<Vec2> rhombus() { return {{0.75, 0}, {0, kH}, {2.25, 0}, {1.5, kH}}; }

// Obstacle-fallback layout: mover first, then beacons A, B, C.
std::vector<Vec2> fallback_layout() { return {{0, kH}, {0.75, 0}, {2.25, 0}, {1.5, kH}}; }

bool has_point(const std::vector<Candidate>& cs, Vec2 p) {
  return std::any_of(cs.begin(), cs.end(), [&](const Candidate& c) { return distance(c.vertex, p) < 1e-9; });
}

// Samples the polyline mover -> path at 1 cm and returns the smallest
// clearance to `points` and to the obstacle safety zones.
struct Clearance {
  double beacons = 1e9;
  double zones = 1e9;
};

Clearance sample_clearance(Vec2 start, const std::vector<Vec2>& path, const std::vector<Vec2>& stationary,
                           const std::vector<Obstacle>& obstacles) {
  Clearance c;
  Vec2 prev = start;
  for (const Vec2& next : path) {
    const double len = distance(prev, next);
    const int n = std::max(1, static_cast<int>(std::ceil(len / 0.01)));
    for (int i = 0; i <= n; ++i) {
      const Vec2 p = prev + (next - prev) * (double(i) / n);
      for (const Vec2& s : stationary) c.beacons = std::min(c.beacons, distance(p, s));
      for (const Obstacle& o : obstacles) c.zones = std::min(c.zones, distance(p, o.center) - o.zone_radius());
    }
    prev = next;
  }
  return c;
}

std::vector<Vec2> apply(std::vector<Vec2> positions, const PlanStep& step) {
  positions[step.moving_robot] = step.target_vertex;
  return positions;
}

bool all_on_lattice(const std::vector<Vec2>& p, const TriangularLattice& lat) {
  return std::all_of(p.begin(), p.end(), [&](Vec2 q) { return distance(lat.point(lat.nearest(q)), q) < 1e-9; });
}

}  // namespace

TEST_SUITE("planner") {
  TEST_CASE("moving robot is the farthest from the destination") {
    const std::vector<Vec2> p{{0.75, 0}, {0, 1.3}, {2.25, 0}, {1.5, 1.3}};
    CHECK(select_moving_robot(p, {10, 1}) == 1);
    const std::vector<std::size_t> excluded{1};
    CHECK(select_moving_robot(p, {10, 1}, excluded) == 0);
  }

  TEST_CASE("ties go to the lowest id") {
    const std::vector<Vec2> p{{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    CHECK(select_moving_robot(p, {0, 0}) == 0);
  }

  TEST_CASE("the selected robot is never the one nearest the destination") {
    std::mt19937_64 g(4);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int i = 0; i < 500; ++i) {
      std::vector<Vec2> p;
      for (int k = 0; k < 4; ++k) p.push_back({u(g), u(g)});
      const Vec2 dest = p[i % 4];
      const std::size_t m = select_moving_robot(p, dest);
      CHECK(m != static_cast<std::size_t>(i % 4));
      for (const Vec2& q : p) CHECK(distance(q, dest) <= distance(p[m], dest));
    }
  }

  TEST_CASE("candidates of the leftmost robot include the rightward apex") {
    const auto p = rhombus();
    const auto cs = candidate_vertices(p, 1);
    // Oracle: apexes of every base of the remaining triangle, minus occupied spots.
    std::vector<Vec2> oracle;
    const std::array<Vec2, 3> t{p[0], p[2], p[3]};
    for (int e = 0; e < 3; ++e) {
      for (Side s : {Side::kLeft, Side::kRight}) {
        const Vec2 v = third_vertex(t[e], t[(e + 1) % 3], s);
        const bool occupied = std::any_of(p.begin(), p.end(), [&](Vec2 q) { return distance(q, v) < 0.25; });
        const bool is_third = distance(v, t[(e + 2) % 3]) < 1e-9;
        if (!occupied && !is_third) oracle.push_back(v);
      }
    }
    CHECK(cs.size() == oracle.size());
    for (const Vec2& v : oracle) CHECK(has_point(cs, v));
    CHECK(has_point(cs, {3.0, kH}));
    for (const Candidate& c : cs) {
      CHECK(std::abs(distance(c.vertex, c.beacon_positions[0]) - kL) < 1e-9);
      CHECK(std::abs(distance(c.vertex, c.beacon_positions[1]) - kL) < 1e-9);
    }
  }

  TEST_CASE("fallback layout path is {point 1, point 3, point c}") {
    const auto p = fallback_layout();
    const Vec2 c{1.5, -kH};
    const std::array<Vec2, 3> beacons{p[1], p[2], p[3]};
    const auto path = inner_path(beacons, p[0], c);
    REQUIRE(path.size() == 3);
    CHECK(distance(path[0], midpoint(p[1], p[3])) < 1e-12);  // point 1: A-C
    CHECK(distance(path[1], midpoint(p[1], p[2])) < 1e-12);  // point 3: A-B
    CHECK(distance(path[2], c) < 1e-12);
  }

  TEST_CASE("inner path collapses duplicate midpoints") {
    const auto p = fallback_layout();
    const std::array<Vec2, 3> beacons{p[1], p[2], p[3]};
    const Vec2 mid = midpoint(p[1], p[2]);
    const auto path = inner_path(beacons, mid, {1.5, -kH});
    CHECK(path.size() == 2);
  }

  TEST_CASE("blocked nearest candidate falls back to the next one") {
    const auto p = fallback_layout();
    const auto cs = candidate_vertices(p, 0);
    const Vec2 dest{10, 0};
    const std::vector<Obstacle> none;
    const auto free = select_target_vertex(cs, dest, none, p[0]);
    REQUIRE(free);
    CHECK(distance(free->vertex, {3.0, kH}) < 1e-9);

    const std::vector<Obstacle> near_b{{{3.2, 1.4}, 0.1}};
    const auto fallback = select_target_vertex(cs, dest, near_b, p[0]);
    REQUIRE(fallback);
    CHECK(distance(fallback->vertex, {1.5, -kH}) < 1e-9);

    const std::vector<Obstacle> both{{{3.2, 1.4}, 0.1}, {{1.7, -1.4}, 0.1}};
    CHECK_FALSE(select_target_vertex(cs, dest, both, p[0]));
  }

  TEST_CASE("blocked mover escalates to the next-farthest robot") {
    const auto p = fallback_layout();
    const Vec2 dest{10, 0};
    // Obstacles around every candidate of robot 0.
    std::vector<Obstacle> obs;
    for (const Candidate& c : candidate_vertices(p, 0)) obs.push_back({c.vertex, 0.1});
    const PlanStep step = plan_n_robot_step(p, dest, obs);
    CHECK(step.moving_robot != 0);
    CHECK_FALSE(path_blocked(p[step.moving_robot], step.inner_path, obs));
  }

  TEST_CASE("planning fails when every robot is blocked") {
    const auto p = fallback_layout();
    const std::vector<Obstacle> wall{{{1.125, 0.65}, 4.0, 0.25}};
    CHECK_THROWS_AS(plan_n_robot_step(p, {10, 0}, wall), PlanningError);
  }

  TEST_CASE("segment against circle") {
    CHECK(segment_hits_circle({-1, 0}, {1, 0}, {0, 0.5}, 0.6));
    CHECK_FALSE(segment_hits_circle({-1, 0}, {1, 0}, {0, 0.5}, 0.4));
    CHECK_FALSE(segment_hits_circle({-1, 0}, {1, 0}, {2, 0}, 0.9));
    CHECK(point_segment_distance({2, 0}, {-1, 0}, {1, 0}) == doctest::Approx(1.0));
  }

  TEST_CASE("randomized formations keep clearance and avoid safety zones") {
    std::mt19937_64 g(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int planned = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      const double angle = std::numbers::pi * u(g);
      const Vec2 shift{5 * u(g), 5 * u(g)};
      std::vector<Vec2> p;
      for (Vec2 q : rhombus()) p.push_back(rotate(q, angle) + shift);
      const Vec2 dest = shift + Vec2{20 * u(g), 20 * u(g)};
      std::vector<Obstacle> obs;
      const int n_obs = static_cast<int>(4 * (u(g) + 1));
      for (int k = 0; k < n_obs; ++k) obs.push_back({shift + Vec2{4 * u(g), 4 * u(g)}, 0.1 + 0.2 * (u(g) + 1)});
      try {
        const PlanStep step = plan_n_robot_step(p, dest, obs);
        ++planned;
        std::vector<Vec2> stationary;
        for (std::size_t i = 0; i < p.size(); ++i) {
          if (i != step.moving_robot) stationary.push_back(p[i]);
        }
        const Clearance c = sample_clearance(p[step.moving_robot], step.inner_path, stationary, obs);
        CHECK(c.beacons >= 0.25 * kL);
        CHECK(c.zones > 0.0);
        CHECK(distance(step.inner_path.back(), step.target_vertex) < 1e-12);
      } catch (const PlanningError&) {
      }
    }
    CHECK(planned > 500);
  }

  TEST_CASE("four robots step east in a straight line") {
    std::vector<Vec2> p = rhombus();
    const TriangularLattice lat = TriangularLattice::from_triangle(p[0], p[2], p[3]);
    const Vec2 dest{30, 0.65};
    Vec2 c0{};
    for (Vec2 q : p) c0 = c0 + q / 4.0;
    for (int k = 0; k < 6; ++k) {
      const PlanStep step = plan_n_robot_step(p, dest, {});
      const double vacated = distance(p[step.moving_robot], dest);
      CHECK(distance(step.target_vertex, dest) < vacated);
      p = apply(p, step);
      CHECK(all_on_lattice(p, lat));
    }
    Vec2 c1{};
    for (Vec2 q : p) c1 = c1 + q / 4.0;
    CHECK(c1.x - c0.x > 3.0);
    CHECK(std::abs(c1.y - c0.y) < kH);
  }

  TEST_CASE("six robots leapfrog toward a far destination") {
    std::vector<Vec2> p = rhombus();
    p.push_back({3.0, kH});
    p.push_back({3.75, 0.0});
    const TriangularLattice lat = TriangularLattice::from_triangle(p[0], p[2], p[3]);
    const Vec2 dest{40, 0.65};
    for (int k = 0; k < 12; ++k) {
      const std::size_t rear = select_moving_robot(p, dest);
      const PlanStep step = plan_n_robot_step(p, dest, {});
      CHECK(step.moving_robot == rear);
      double head = -1e9;
      for (Vec2 q : p) head = std::max(head, q.x);
      CHECK(step.target_vertex.x > head);  // the trailing robot lands at the front
      p = apply(p, step);
      CHECK(all_on_lattice(p, lat));
      CHECK(can_release(p, select_moving_robot(p, dest)));
    }
  }

  TEST_CASE("arrival when the vertex nearest the destination is occupied") {
    const auto p = rhombus();
    const TriangularLattice lat = TriangularLattice::from_triangle(p[0], p[2], p[3]);
    CHECK(destination_reached(p, lat, {1.4, 1.2}));
    CHECK_FALSE(destination_reached(p, lat, {10, 0}));
  }

  TEST_CASE("planning is deterministic") {
    const auto p = fallback_layout();
    const std::vector<Obstacle> obs{{{3.2, 1.4}, 0.1}};
    const PlanStep a = plan_n_robot_step(p, {10, 0}, obs);
    const PlanStep b = plan_n_robot_step(p, {10, 0}, obs);
    CHECK(a.moving_robot == b.moving_robot);
    CHECK(a.target_vertex == b.target_vertex);
    CHECK(a.inner_path == b.inner_path);
    CHECK(a.beacons == b.beacons);
  }

  TEST_CASE("obstacle validation") {
    CHECK_THROWS(Obstacle{{0, 0}, -1.0}.validate());
    CHECK_NOTHROW(Obstacle{{0, 0}, 0.5}.validate());
  }
}
