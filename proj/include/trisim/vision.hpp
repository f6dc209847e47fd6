#pragma once

#include <stdexcept>

#include "trisim/geometry.hpp"

namespace trisim {

class Rng;

class VisibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CameraMount { kFront, kRear };

inline constexpr double kDefaultTargetDisparity = 280.0;

/// Focal length that makes the side beacons of a formed vertex appear exactly
/// `d_t` pixels from the opposite beacon (they sit 30 deg off the optical axis).
inline double focal_for_disparity(double d_t) { return d_t * std::numbers::sqrt3; }

struct CameraConfig {
  double focal_px = focal_for_disparity(kDefaultTargetDisparity);
  double image_width = 640.0;
  double principal_u = 320.0;
  CameraMount mount = CameraMount::kRear;
  double max_range = 6.0;
  /// Round marker columns to whole pixels.
  bool quantize = true;
  /// Std of the marker-centre detection jitter, pixels. Only applied when a
  /// random stream is supplied to project_marker.
  double pixel_noise_std = 1.5;

  void validate() const;
  /// Full horizontal field of view, radians.
  double horizontal_fov() const;
  bool operator==(const CameraConfig&) const = default;
};

struct PixelObservation {
  int robot_id = -1;
  /// Image column; u grows toward the camera's left-hand side.
  double u = 0.0;
  bool visible = false;
};

struct LateralDistances {
  double d_m1 = 0.0;
  double d_m2 = 0.0;
  double d_t = kDefaultTargetDisparity;
};

/// Pinhole projection of a marker centre. The camera looks along the robot
/// heading (front mount) or against it (rear mount). With depth Z and offset X
/// along the camera's left axis, u = principal_u + focal_px * X / Z.
/// Out-of-view targets come back with visible = false.
PixelObservation project_marker(const Pose2D& camera_pose, const CameraConfig& config, Vec2 target,
                                int robot_id = -1, Rng* jitter = nullptr);

/// d_m1 = |u_left - u_center|, d_m2 = |u_right - u_center|.
/// Throws VisibilityError when any marker is out of view.
LateralDistances lateral_distances(const PixelObservation& center, const PixelObservation& left,
                                   const PixelObservation& right, double d_t);

}  // namespace trisim
