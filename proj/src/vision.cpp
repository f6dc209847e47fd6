#include "trisim/vision.hpp"

#include <cmath>

#include "trisim/noise.hpp"

namespace trisim {

void CameraConfig::validate() const {
  if (!(focal_px > 0.0)) throw std::invalid_argument("camera focal_px must be positive");
  if (!(principal_u > 0.0 && principal_u < image_width)) {
    throw std::invalid_argument("camera principal_u must lie inside the image");
  }
  if (!(max_range > 0.0)) throw std::invalid_argument("camera max_range must be positive");
  if (pixel_noise_std < 0.0) throw std::invalid_argument("camera pixel_noise_std must be non-negative");
  // Both side beacons sit 30 deg off-axis when viewed from a formed vertex.
  if (!(horizontal_fov() > std::numbers::pi / 3.0)) {
    throw std::invalid_argument("camera field of view cannot contain both side beacons of a formed vertex");
  }
}

double CameraConfig::horizontal_fov() const { return 2.0 * std::atan(image_width / (2.0 * focal_px)); }

PixelObservation project_marker(const Pose2D& camera_pose, const CameraConfig& config, Vec2 target,
                                int robot_id, Rng* jitter) {
  PixelObservation obs;
  obs.robot_id = robot_id;
  const double look = config.mount == CameraMount::kFront ? camera_pose.heading()
                                                          : camera_pose.heading() + std::numbers::pi;
  const Vec2 forward = heading_vector(look);
  const Vec2 d = target - camera_pose.position();
  const double depth = dot(d, forward);
  const double offset = dot(d, perp(forward));
  if (!(depth > 0.0) || depth > config.max_range) {
    return obs;
  }
  double u = config.principal_u + config.focal_px * offset / depth;
  if (jitter != nullptr && config.pixel_noise_std > 0.0) {
    u += jitter->normal(0.0, config.pixel_noise_std);
  }
  if (config.quantize) {
    u = std::round(u);
  }
  obs.u = u;
  obs.visible = u >= 0.0 && u < config.image_width;
  return obs;
}

LateralDistances lateral_distances(const PixelObservation& center, const PixelObservation& left,
                                   const PixelObservation& right, double d_t) {
  if (!center.visible || !left.visible || !right.visible) {
    throw VisibilityError("a beacon marker is outside the camera view");
  }
  return {std::abs(left.u - center.u), std::abs(right.u - center.u), d_t};
}

}  // namespace trisim
