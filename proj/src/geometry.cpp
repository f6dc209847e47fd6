#include "trisim/geometry.hpp"

#include <algorithm>
#include <array>
#include <limits>

namespace trisim {

double normalize_angle(double angle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle, kTwoPi);
  if (a <= -std::numbers::pi) {
    a += kTwoPi;
  } else if (a > std::numbers::pi) {
    a -= kTwoPi;
  }
  return a;
}

Pose2D::Pose2D(double x, double y, double heading)
    : x_(x), y_(y), heading_(normalize_angle(heading)) {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(heading)) {
    throw GeometryError("pose components must be finite");
  }
}

Vec2 third_vertex(Vec2 a, Vec2 b, Side side) {
  const Vec2 base = b - a;
  if (norm(base) <= 0.0) {
    throw GeometryError("degenerate triangle base: endpoints coincide");
  }
  constexpr double kSixty = std::numbers::pi / 3.0;
  return a + rotate(base, side == Side::kLeft ? kSixty : -kSixty);
}

bool Triangle::is_equilateral(double tol) const {
  return std::abs(distance(v1, v2) - side) <= tol && std::abs(distance(v2, v3) - side) <= tol &&
         std::abs(distance(v3, v1) - side) <= tol;
}

Triangle make_triangle(Vec2 a, Vec2 b, Side side) {
  return Triangle{a, b, third_vertex(a, b, side), distance(a, b)};
}

double side_spread(Vec2 a, Vec2 b, Vec2 c) {
  const std::array<double, 3> sides{distance(a, b), distance(b, c), distance(c, a)};
  const auto [lo, hi] = std::minmax_element(sides.begin(), sides.end());
  return *hi - *lo;
}

TriangleFrame make_triangle_frame(Vec2 b1, Vec2 b2, Vec2 apex_side) {
  if (distance(b1, b2) <= 0.0) {
    throw GeometryError("degenerate triangle base: endpoints coincide");
  }
  const Vec2 origin = midpoint(b1, b2);
  const Vec2 lateral = unit(b2 - b1);
  Vec2 longitudinal = perp(lateral);
  if (dot(longitudinal, apex_side - origin) < 0.0) {
    longitudinal = -longitudinal;
  }
  return {origin, lateral, longitudinal};
}

FrameCoords to_triangle_frame(const TriangleFrame& frame, Vec2 p) {
  const Vec2 d = p - frame.origin;
  return {dot(d, frame.lateral_axis), dot(d, frame.longitudinal_axis)};
}

Vec2 from_triangle_frame(const TriangleFrame& frame, FrameCoords c) {
  return frame.origin + frame.lateral_axis * c.lateral + frame.longitudinal_axis * c.longitudinal;
}

std::string to_string(Direction d) {
  switch (d) {
    case Direction::kLeft:
      return "left";
    case Direction::kRight:
      return "right";
    case Direction::kUp:
      return "up";
    case Direction::kDown:
      return "down";
  }
  return "unknown";
}

Direction classify_direction(Vec2 from, Vec2 to, Vec2 reference_axis) {
  const Vec2 ex = unit(reference_axis);
  const Vec2 d = to - from;
  const double along = dot(d, ex);
  const double across = dot(d, perp(ex));
  if (std::abs(along) >= std::abs(across)) {
    return along >= 0.0 ? Direction::kRight : Direction::kLeft;
  }
  return across >= 0.0 ? Direction::kUp : Direction::kDown;
}

std::vector<Vec2> ideal_vertex_lattice(const Triangle& start_triangle,
                                       std::span<const LatticeStep> steps) {
  if (!start_triangle.is_equilateral(1e-6 * std::max(1.0, start_triangle.side))) {
    throw GeometryError("start triangle is not equilateral");
  }
  const Vec2 axis = start_triangle.v2 - start_triangle.v1;
  std::vector<Vec2> current{start_triangle.v1, start_triangle.v2, start_triangle.v3};
  std::vector<Vec2> out;
  out.reserve(steps.size());
  for (const LatticeStep& step : steps) {
    if (step.moving_robot_index >= current.size()) {
      throw GeometryError("lattice step robot index out of range");
    }
    const Vec2 released = current[step.moving_robot_index];
    std::vector<Vec2> base;
    for (std::size_t i = 0; i < current.size(); ++i) {
      if (i != step.moving_robot_index) base.push_back(current[i]);
    }
    // Apex on the far side of the base, i.e. the reflection of the released
    // vertex through the base midpoint for an exact rhombus.
    const Vec2 left = third_vertex(base[0], base[1], Side::kLeft);
    const Vec2 right = third_vertex(base[0], base[1], Side::kRight);
    const Vec2 apex = distance(left, released) > distance(right, released) ? left : right;
    const Direction actual = classify_direction(released, apex, axis);
    if (actual != step.direction) {
      throw GeometryError("robot " + std::to_string(step.moving_robot_index) + " cannot move " +
                          to_string(step.direction) + " (its reachable direction is " +
                          to_string(actual) + ")");
    }
    out.push_back(apex);
    current = {base[0], base[1], apex};
  }
  return out;
}

TriangularLattice::TriangularLattice(Vec2 origin, Vec2 e1, Vec2 e2)
    : origin_(origin), e1_(e1), e2_(e2) {
  const double det = cross(e1, e2);
  if (std::abs(det) <= 0.0) {
    throw GeometryError("lattice basis is degenerate");
  }
  inv_det_ = 1.0 / det;
}

TriangularLattice TriangularLattice::from_triangle(Vec2 a, Vec2 b, Vec2 c) {
  return TriangularLattice(a, b - a, c - a);
}

TriangularLattice::Coord TriangularLattice::nearest(Vec2 p) const {
  const Vec2 d = p - origin_;
  const double fi = cross(d, e2_) * inv_det_;
  const double fj = cross(e1_, d) * inv_det_;
  const long i0 = static_cast<long>(std::floor(fi));
  const long j0 = static_cast<long>(std::floor(fj));
  Coord best{i0, j0};
  double best_d = std::numeric_limits<double>::infinity();
  for (long di = 0; di <= 1; ++di) {
    for (long dj = 0; dj <= 1; ++dj) {
      const Coord c{i0 + di, j0 + dj};
      const double dd = distance(point(c), p);
      if (dd < best_d - 1e-12) {
        best_d = dd;
        best = c;
      }
    }
  }
  return best;
}

}  // namespace trisim
