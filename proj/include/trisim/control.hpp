#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "trisim/geometry.hpp"
#include "trisim/vision.hpp"

namespace trisim {

class ControllerTimeout : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct UnicycleState {
  Pose2D pose;
  double wheel_radius = 0.148;
};

struct WheelCommand {
  double v = 0.0;
  double omega = 0.0;
  bool operator==(const WheelCommand&) const = default;
};

enum class ControllerPhase { kApproaching, kInnerTriangle, kBuildingTriangle, kSettled };

const char* to_string(ControllerPhase phase);

/// Euler step of the unicycle; motion is always along the current heading.
UnicycleState step_unicycle(const UnicycleState& state, const WheelCommand& cmd, double dt);

struct WaypointGains {
  double v_nom = 0.99568;
  double k_omega = 2.0;
  double omega_max = 1.5;
  double capture_radius = 0.05;
  double min_speed = 0.05;
  /// Heading errors beyond this scale the forward speed by cos(error).
  double slow_heading_error = std::numbers::pi / 4.0;

  /// Gains whose turn rates scale with `v_nom`, so the driven path is the same
  /// at every speed and only the time axis stretches.
  static WaypointGains speed_invariant(double v_nom, double curvature_gain, double max_curvature,
                                       double capture_radius);
};

/// Proportional heading controller toward `waypoint`. Forward speed is v_nom,
/// capped at omega_max * distance / 2 and scaled down for large heading errors.
WheelCommand waypoint_follow(const UnicycleState& state, Vec2 waypoint, const WaypointGains& gains);

/// Tuning of the rear-camera vertex controller. Pixel quantities refer to the
/// rear image.
struct BuildingConfig {
  double d_t = kDefaultTargetDisparity;
  double principal_u = 320.0;
  double focal_px = focal_for_disparity(kDefaultTargetDisparity);
  double tol_eq = 2.0;
  double tol_center = 3.0;
  /// Settling also needs the mean disparity this close to d_t.
  double tol_range = 0.5;
  /// Forward speed per pixel of range error, m/s/px.
  double k_range = 0.01;
  double v_min = 0.005;
  double v_max = 0.15;
  /// Speed of the back-and-forth arcs that remove lateral imbalance.
  double v_lateral = 0.1;
  /// Lateral-correction arcs reverse when the mean-disparity error drops below
  /// -range_band_far (beyond the vertex) or exceeds range_band_near.
  double range_band_far = 40.0;
  double range_band_near = 2.0;
  /// Heading tilt per pixel of lateral imbalance, rad/px, and its limit.
  double k_tilt = 0.01;
  double max_tilt = 0.08;
  double k_turn = 2.0;
  double omega_min = 0.05;
  double omega_max = 0.6;
  double omega_search = 0.6;
  /// With a side beacon lost, the opposite beacon is re-centred in place only
  /// beyond this offset (px); closer than that the robot backs away instead.
  double search_center_tol = 20.0;
  double image_width = 640.0;
  /// Side markers are kept at least this many pixels inside the image.
  double edge_margin = 10.0;
};

/// Hysteresis carried between controller frames.
struct BuildingState {
  int travel_dir = 1;
  bool correcting_lateral = false;
  bool rotating = false;
  bool operator==(const BuildingState&) const = default;
};

struct BuildingDecision {
  WheelCommand cmd;
  bool settled = false;
  BuildingState next;
};

/// Pure pursuit along a polyline: steers toward the point `lookahead` metres
/// ahead of the robot's projection on the current leg. `segment` indexes the
/// current leg and only moves forward. Returns a zero command once within the
/// capture radius of the last point.
WheelCommand path_follow(const UnicycleState& state, std::span<const Vec2> path, std::size_t& segment,
                         double lookahead, const WaypointGains& gains);

/// Rear-camera vertex controller. Priorities: keep the opposite beacon at
/// the image centre (offset by the steering tilt while a lateral imbalance is
/// being removed), equalise d_m1 and d_m2 by forward/backward arcs toward the
/// beacon with the larger disparity, drive the disparities onto d_t, then
/// settle. Pure: identical inputs give identical decisions.
BuildingDecision building_triangle_step(const LateralDistances& distances, const PixelObservation& center,
                                        const BuildingState& state, const BuildingConfig& config);

/// As above but from raw observations; any invisible marker yields a search
/// command instead of a decision to settle.
BuildingDecision building_triangle_step(const PixelObservation& center, const PixelObservation& left,
                                        const PixelObservation& right, const BuildingState& state,
                                        const BuildingConfig& config);

/// True when the settle conditions hold for these measurements.
bool settle_conditions_hold(const LateralDistances& distances, const PixelObservation& center,
                            const BuildingConfig& config);

struct ControlConfig {
  WaypointGains approach;
  BuildingConfig building;
  double dt = 0.01;
  /// Camera frames (and controller updates) are this far apart.
  double frame_period = 1.0 / 30.0;
  double t_max = 300.0;
  /// Distance to the target vertex at which the rear-camera controller takes over.
  double handoff_radius = 0.15;
  /// Std (m) of the lateral aiming error of the front-camera approach: the
  /// final approach leg is shifted sideways by one draw per maneuver.
  double approach_aim_std = 0.04;
  /// Look-ahead of the line tracker on the last approach leg.
  double lookahead = 0.3;
  bool record_trajectory = true;
};

/// One maneuver: the mover leaves `start`, passes the gates of `inner_path`
/// and settles at the apex on the far side of base (base_a, base_b) from the
/// opposite beacon.
struct VertexManeuver {
  Pose2D start;
  Vec2 base_a;
  Vec2 base_b;
  Vec2 opposite;
  std::vector<Vec2> inner_path;
};

struct TrajectorySample {
  double t = 0.0;
  Pose2D pose;
  ControllerPhase phase = ControllerPhase::kApproaching;
};

struct ManeuverResult {
  Pose2D final_pose;
  double settle_time = 0.0;
  std::vector<TrajectorySample> trajectory;
  LateralDistances final_distances;
  PixelObservation final_center;
};

/// Closed-loop maneuver. `measurement_noise` switches quantisation and pixel
/// jitter of the rear camera; `seed` drives the jitter. Throws
/// ControllerTimeout when the mover has not settled after config.t_max.
ManeuverResult run_vertex_maneuver(const VertexManeuver& maneuver, const ControlConfig& config,
                                   const CameraConfig& rear_camera, bool measurement_noise,
                                   std::uint64_t seed);

}  // namespace trisim
