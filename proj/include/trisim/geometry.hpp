#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace trisim {

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
constexpr Vec2 midpoint(Vec2 a, Vec2 b) { return {(a.x + b.x) / 2.0, (a.y + b.y) / 2.0}; }
/// Rotates by +90 degrees (counter-clockwise).
constexpr Vec2 perp(Vec2 v) { return {-v.y, v.x}; }
inline Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}
inline Vec2 unit(Vec2 v) { return v / norm(v); }
inline Vec2 heading_vector(double heading) { return {std::cos(heading), std::sin(heading)}; }

/// Wraps an angle into (-pi, pi].
double normalize_angle(double angle);

/// Planar robot pose. Heading is CCW from +x and always kept in (-pi, pi].
class Pose2D {
 public:
  Pose2D() = default;
  Pose2D(double x, double y, double heading);
  Pose2D(Vec2 position, double heading) : Pose2D(position.x, position.y, heading) {}

  double x() const { return x_; }
  double y() const { return y_; }
  double heading() const { return heading_; }
  Vec2 position() const { return {x_, y_}; }

  bool operator==(const Pose2D&) const = default;

 private:
  double x_ = 0.0;
  double y_ = 0.0;
  double heading_ = 0.0;
};

enum class Side { kLeft, kRight };

/// Apex of the equilateral triangle on base a->b. kLeft puts the apex in the
/// half-plane to the left of the directed line a->b.
Vec2 third_vertex(Vec2 a, Vec2 b, Side side);

inline constexpr double kTolGeom = 1e-9;
inline constexpr double kTolForm = 0.1;

struct Triangle {
  Vec2 v1;
  Vec2 v2;
  Vec2 v3;
  double side = 0.0;

  /// True when all three pairwise distances are within `tol` of `side`.
  bool is_equilateral(double tol = kTolGeom) const;
  std::vector<Vec2> vertices() const { return {v1, v2, v3}; }
};

/// Builds an exact equilateral triangle with base a->b and apex on `side`.
Triangle make_triangle(Vec2 a, Vec2 b, Side side);

/// Spread between the longest and shortest sides of the triangle abc.
double side_spread(Vec2 a, Vec2 b, Vec2 c);

struct TriangleFrame {
  Vec2 origin;
  Vec2 lateral_axis;
  Vec2 longitudinal_axis;
};

/// Frame of the new triangle on base (b1, b2): origin at the base midpoint,
/// lateral axis along b1->b2, longitudinal axis pointing toward `apex_side`.
TriangleFrame make_triangle_frame(Vec2 b1, Vec2 b2, Vec2 apex_side);

struct FrameCoords {
  double lateral = 0.0;
  double longitudinal = 0.0;
};

FrameCoords to_triangle_frame(const TriangleFrame& frame, Vec2 p);
Vec2 from_triangle_frame(const TriangleFrame& frame, FrameCoords c);

enum class Direction { kLeft, kRight, kUp, kDown };

std::string to_string(Direction d);

struct LatticeStep {
  std::size_t moving_robot_index = 0;
  Direction direction = Direction::kRight;
};

/// Error-free chain of equilateral triangles. Each step releases vertex
/// `moving_robot_index` of the current triangle and places it at the apex on
/// the opposite side of the remaining base; the released vertex is removed and
/// the new one appended. Directions are classified in the frame whose +x axis
/// is start_triangle.v1 -> v2.
std::vector<Vec2> ideal_vertex_lattice(const Triangle& start_triangle,
                                       std::span<const LatticeStep> steps);

/// Classifies the displacement `from -> to` into one of the four movement
/// directions, measured in a frame whose +x axis is `reference_axis`.
Direction classify_direction(Vec2 from, Vec2 to, Vec2 reference_axis);

/// Triangular lattice spanned by two unit-length-L basis vectors at 60 deg.
class TriangularLattice {
 public:
  struct Coord {
    long i = 0;
    long j = 0;
    bool operator==(const Coord&) const = default;
    auto operator<=>(const Coord&) const = default;
  };

  TriangularLattice(Vec2 origin, Vec2 e1, Vec2 e2);

  /// Lattice spanned by an equilateral triangle's first two edges.
  static TriangularLattice from_triangle(Vec2 a, Vec2 b, Vec2 c);

  Vec2 point(Coord c) const { return origin_ + e1_ * double(c.i) + e2_ * double(c.j); }
  Coord nearest(Vec2 p) const;
  double side() const { return norm(e1_); }
  Vec2 origin() const { return origin_; }

 private:
  Vec2 origin_;
  Vec2 e1_;
  Vec2 e2_;
  double inv_det_;
};

}  // namespace trisim
