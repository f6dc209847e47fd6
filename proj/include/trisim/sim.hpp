#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "trisim/control.hpp"
#include "trisim/geometry.hpp"
#include "trisim/noise.hpp"
#include "trisim/planner.hpp"
#include "trisim/vision.hpp"

namespace trisim {

/// Invalid scenario content.
class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A run failed; the message names the run index.
class SimulationError : public std::runtime_error {
 public:
  SimulationError(std::size_t run_index, const std::string& what)
      : std::runtime_error("run " + std::to_string(run_index) + ": " + what), run_index_(run_index) {}
  std::size_t run_index() const { return run_index_; }

 private:
  std::size_t run_index_;
};

enum class Mode { kMicro, kMacro, kDeadReckoning };

std::string to_string(Mode mode);
/// Parses "micro", "macro" or "dead_reckoning".
std::optional<Mode> parse_mode(const std::string& text);

/// Vertex-controller settings exposed to scenarios (micro mode).
struct MicroSettings {
  double tol_eq = 2.0;
  double tol_center = 3.0;
  double approach_aim_std = 0.04;
  double t_max = 300.0;
  bool measurement_noise = true;
  /// Closed-loop trajectories are kept for runs with a lower index.
  std::size_t trajectory_runs = 1;
  bool operator==(const MicroSettings&) const = default;
};

/// Dead-reckoning robot path tracking; turn rates scale with speed.
struct DrSettings {
  double curvature_gain = 4.0;
  double max_curvature = 4.0;
  double capture_radius = 0.05;
  double lookahead = 0.5;
  /// Spacing of the recorded ticks, seconds (the integration uses dt).
  double record_period = 0.1;
  bool operator==(const DrSettings&) const = default;
};

struct Scenario {
  std::string name = "scenario";
  Mode mode = Mode::kMacro;
  std::vector<Pose2D> robots;
  double side = 1.5;
  double d_t = kDefaultTargetDisparity;
  CameraConfig camera;
  std::vector<Vec2> waypoints;
  /// Final goal of the formation; the last waypoint when unset.
  std::optional<Vec2> destination;
  std::vector<Obstacle> obstacles;
  NoiseModels noise;
  double omega_wheel = 5.8;
  double dt = 0.01;
  std::size_t runs = 100;
  std::uint64_t master_seed = 42;
  std::size_t max_steps = 2000;
  MicroSettings micro;
  DrSettings dr;

  Vec2 goal() const { return destination ? *destination : waypoints.back(); }
  /// Throws ScenarioError naming the offending field.
  void validate() const;
  bool operator==(const Scenario&) const = default;
};

/// The standard four-robot start: rhombus with side L whose lower-left vertex
/// sits at (L/2, 0).
std::vector<Pose2D> standard_formation(double side);

/// Grows a formation to `n` robots by repeatedly adding the free lattice
/// vertex (adjacent to a formed triangle) farthest from `away_from`.
std::vector<Pose2D> extend_formation(std::span<const Pose2D> robots, std::size_t n, Vec2 away_from,
                                     double side);

struct StepRecord {
  std::size_t step = 0;
  std::size_t mover_id = 0;
  Vec2 ideal;
  Vec2 actual;
  /// Placement error of this maneuver relative to the apex of the realised
  /// beacons, in the new triangle's frame.
  double e_lat = 0.0;
  double e_lon = 0.0;
};

struct TickRecord {
  double t = 0.0;
  Pose2D truth;
  Pose2D estimate;
  double error = 0.0;
};

struct RunRecord {
  std::size_t run_index = 0;
  Mode mode = Mode::kMacro;
  std::vector<StepRecord> steps;
  std::vector<TickRecord> ticks;
  /// Micro mode: closed-loop trajectory of each maneuver.
  std::vector<std::vector<TrajectorySample>> maneuvers;
  double final_error = 0.0;
  std::size_t triangle_count = 0;
  double travel_time = 0.0;
};

RunRecord run_macro(const Scenario& scenario, std::size_t run_index);
RunRecord run_micro(const Scenario& scenario, std::size_t run_index);
RunRecord run_dead_reckoning(const Scenario& scenario, std::size_t run_index);
/// Dispatches on scenario.mode.
RunRecord run_once(const Scenario& scenario, std::size_t run_index);

struct MagnitudeStats {
  double mean = 0.0;
  double std = 0.0;
};

struct AggregateReport {
  Mode mode = Mode::kMacro;
  std::size_t runs = 0;
  MagnitudeStats final_error;
  double mean_triangle_count = 0.0;
  double mean_travel_time = 0.0;
  /// Over all maneuvers of all runs (macro and micro).
  MagnitudeStats step_lat;
  MagnitudeStats step_lon;
  std::vector<RunRecord> records;
};

/// Parallel worker count: TRISIM_THREADS when set and positive, otherwise the
/// hardware concurrency.
std::size_t worker_count();

/// Runs 0..runs-1 of the scenario's mode. Results are reduced in run order,
/// so the report does not depend on the worker count. The first failing run
/// (lowest index) is rethrown as SimulationError.
AggregateReport monte_carlo(const Scenario& scenario);

/// Mean and sample std of `values` (std 0 for fewer than two values).
MagnitudeStats magnitude_stats(std::span<const double> values);

struct CompareCell {
  std::string trajectory;
  double omega_wheel = 0.0;
  AggregateReport proposed;
  AggregateReport dead_reckoning;
};

/// Macro and dead-reckoning Monte Carlo for every (scenario, omega) pair.
std::vector<CompareCell> compare_methods(std::span<const Scenario> scenarios, std::span<const double> omegas);

struct SweepPoint {
  std::size_t n = 0;
  AggregateReport report;
};

/// Macro Monte Carlo with the scenario's formation grown to each n.
std::vector<SweepPoint> scalability_sweep(const Scenario& scenario, std::span<const std::size_t> n_values);

struct ManeuverSample {
  std::size_t index = 0;
  double e_lat = 0.0;
  double e_lon = 0.0;
  double magnitude = 0.0;
};

/// Per-maneuver micro-mode errors, collected from consecutive micro runs
/// until `count` maneuvers are available.
std::vector<ManeuverSample> micro_error_samples(const Scenario& scenario, std::size_t count);

}  // namespace trisim
