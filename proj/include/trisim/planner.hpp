#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "trisim/geometry.hpp"

namespace trisim {

/// No robot of the formation has a reachable, unblocked target vertex.
class PlanningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Obstacle {
  Vec2 center;
  double radius = 0.0;
  /// Robot half-width is folded into the margin.
  double safety_margin = 0.25;

  double zone_radius() const { return radius + safety_margin; }
  void validate() const;
  bool operator==(const Obstacle&) const = default;
};

/// Three stationary robots guiding a maneuver; the new vertex is the apex on
/// base (base_a, base_b) opposite `opposite`.
struct BeaconTriangle {
  std::size_t base_a = 0;
  std::size_t base_b = 0;
  std::size_t opposite = 0;
  bool operator==(const BeaconTriangle&) const = default;
};

struct Candidate {
  Vec2 vertex;
  BeaconTriangle beacons;
  /// Beacon positions in the order base_a, base_b, opposite.
  std::array<Vec2, 3> beacon_positions;
};

struct PlanStep {
  std::size_t moving_robot = 0;
  Vec2 target_vertex;
  std::vector<Vec2> inner_path;
  BeaconTriangle beacons;
};

struct PlannerConfig {
  /// Side length L of the formation's triangles.
  double side = 1.5;
  /// Robots closer than this to side L count as a formed edge.
  double tol_form = kTolForm;
  /// A candidate within this distance of a robot is occupied.
  double occupied_radius = 0.25;
};

/// Farthest robot from `destination`; ties go to the lowest id. Ids listed in
/// `excluded` are skipped. Throws PlanningError when every robot is excluded.
std::size_t select_moving_robot(std::span<const Vec2> positions, Vec2 destination,
                                std::span<const std::size_t> excluded = {});

/// Apexes the mover could complete on each base of a triangle formed by the
/// remaining robots, excluding occupied positions. Each vertex appears once,
/// with the beacon triangle whose centroid is nearest the mover.
std::vector<Candidate> candidate_vertices(std::span<const Vec2> positions, std::size_t moving_robot,
                                          const PlannerConfig& config = {});

/// [midpoint of the beacon edges nearest the mover, midpoint nearest the
/// target, target], with consecutive duplicates collapsed.
std::vector<Vec2> inner_path(const std::array<Vec2, 3>& beacons, Vec2 mover_pos, Vec2 target_vertex);

/// True when the segment a-b passes within `radius` of `center`.
bool segment_hits_circle(Vec2 a, Vec2 b, Vec2 center, double radius);

/// Minimum distance from point p to segment a-b.
double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

/// True when the polyline mover_pos -> path[0] -> ... touches a safety zone,
/// or its end vertex lies inside one.
bool path_blocked(Vec2 mover_pos, std::span<const Vec2> path, std::span<const Obstacle> obstacles);

using PathBuilder = std::function<std::vector<Vec2>(const Candidate&)>;

/// Candidate closest to `destination` whose path avoids every safety zone;
/// blocked candidates fall through to the next closest. Empty when all are
/// blocked (the caller escalates to another mover).
std::optional<Candidate> select_target_vertex(std::span<const Candidate> candidates, Vec2 destination,
                                              std::span<const Obstacle> obstacles, Vec2 mover_pos);
std::optional<Candidate> select_target_vertex(std::span<const Candidate> candidates, Vec2 destination,
                                              std::span<const Obstacle> obstacles, Vec2 mover_pos,
                                              const PathBuilder& build_path);

/// Path for a formation with more than four robots: the mover crosses the
/// formation through midpoints of shared edges (shortest chain) until it
/// reaches the beacon base, then leaves for the target. For a mover adjacent
/// to its beacon triangle this equals inner_path.
std::vector<Vec2> formation_path(std::span<const Vec2> positions, std::size_t moving_robot,
                                 const Candidate& candidate, const PlannerConfig& config = {});

/// True when every robot except `moving_robot` still belongs to a formed
/// triangle of the remaining robots.
bool can_release(std::span<const Vec2> positions, std::size_t moving_robot, const PlannerConfig& config = {});

/// One formation step: mover selection, target selection with fallback and
/// escalation to the next-farthest robot. Throws PlanningError when no robot
/// can move.
PlanStep plan_n_robot_step(std::span<const Vec2> positions, Vec2 destination, std::span<const Obstacle> obstacles,
                           const PlannerConfig& config = {});

/// Arrival test: the lattice vertex nearest `destination` is occupied.
bool destination_reached(std::span<const Vec2> positions, const TriangularLattice& lattice, Vec2 destination,
                         double occupied_radius = 0.25);

}  // namespace trisim
