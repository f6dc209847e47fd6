#include "trisim/control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "trisim/noise.hpp"

namespace trisim {

namespace {

double sign_or(double x, double fallback) {
  if (x > 0.0) return 1.0;
  if (x < 0.0) return -1.0;
  return fallback;
}

WheelCommand rotate_in_place(double heading_error, const BuildingConfig& c) {
  double w = std::clamp(c.k_turn * heading_error, -c.omega_max, c.omega_max);
  if (std::abs(w) < c.omega_min) w = std::copysign(c.omega_min, heading_error);
  return {0.0, w};
}

/// Point `lookahead` beyond the projection of p onto segment a->b, clamped to b.
Vec2 carrot_on_segment(Vec2 p, Vec2 a, Vec2 b, double lookahead) {
  const Vec2 ab = b - a;
  const double len = norm(ab);
  if (len <= 0.0) return b;
  const double along = std::clamp(dot(p - a, ab) / len + lookahead, 0.0, len);
  return a + ab * (along / len);
}

}  // namespace

const char* to_string(ControllerPhase phase) {
  switch (phase) {
    case ControllerPhase::kApproaching:
      return "approaching";
    case ControllerPhase::kInnerTriangle:
      return "inner_triangle";
    case ControllerPhase::kBuildingTriangle:
      return "building_triangle";
    case ControllerPhase::kSettled:
      return "settled";
  }
  return "unknown";
}

UnicycleState step_unicycle(const UnicycleState& state, const WheelCommand& cmd, double dt) {
  const double th = state.pose.heading();
  UnicycleState next = state;
  next.pose = Pose2D(state.pose.x() + cmd.v * std::cos(th) * dt, state.pose.y() + cmd.v * std::sin(th) * dt,
                     th + cmd.omega * dt);
  return next;
}

WaypointGains WaypointGains::speed_invariant(double v_nom, double curvature_gain, double max_curvature,
                                             double capture_radius) {
  WaypointGains g;
  g.v_nom = v_nom;
  g.k_omega = curvature_gain * v_nom;
  g.omega_max = max_curvature * v_nom;
  g.capture_radius = capture_radius;
  g.min_speed = 0.05 * v_nom;
  return g;
}

WheelCommand waypoint_follow(const UnicycleState& state, Vec2 waypoint, const WaypointGains& gains) {
  const Vec2 d = waypoint - state.pose.position();
  if (norm(d) <= gains.capture_radius) return {0.0, 0.0};
  const double err = normalize_angle(std::atan2(d.y, d.x) - state.pose.heading());
  const double omega = std::clamp(gains.k_omega * err, -gains.omega_max, gains.omega_max);
  // Keep the turning radius below half the remaining distance so the robot
  // cannot orbit the waypoint.
  double v = std::clamp(0.5 * gains.omega_max * norm(d), std::min(gains.min_speed, gains.v_nom), gains.v_nom);
  if (std::abs(err) > gains.slow_heading_error) v *= std::max(0.0, std::cos(err));
  return {v, omega};
}

WheelCommand path_follow(const UnicycleState& state, std::span<const Vec2> path, std::size_t& segment,
                         double lookahead, const WaypointGains& gains) {
  if (path.empty()) return {};
  if (path.size() == 1) return waypoint_follow(state, path.front(), gains);
  const Vec2 p = state.pose.position();
  auto progress = [&](std::size_t i) {
    const Vec2 ab = path[i + 1] - path[i];
    const double len = norm(ab);
    return len > 0.0 ? dot(p - path[i], ab) / len : 0.0;
  };
  while (segment + 2 < path.size() &&
         (progress(segment) >= distance(path[segment], path[segment + 1]) ||
          distance(p, path[segment + 1]) < lookahead)) {
    ++segment;
  }
  // Look-ahead that overruns a leg continues on the next one.
  double along = std::max(progress(segment), 0.0) + lookahead;
  std::size_t i = segment;
  for (;;) {
    const double len = distance(path[i], path[i + 1]);
    if (along <= len || i + 2 >= path.size()) {
      const double f = len > 0.0 ? std::min(along, len) / len : 1.0;
      return waypoint_follow(state, path[i] + (path[i + 1] - path[i]) * f, gains);
    }
    along -= len;
    ++i;
  }
}

bool settle_conditions_hold(const LateralDistances& d, const PixelObservation& center, const BuildingConfig& c) {
  return center.visible && std::abs(d.d_m1 - d.d_t) <= c.tol_eq && std::abs(d.d_m2 - d.d_t) <= c.tol_eq &&
         std::abs(d.d_m1 - d.d_m2) <= c.tol_eq && std::abs(center.u - c.principal_u) <= c.tol_center &&
         std::abs(0.5 * (d.d_m1 + d.d_m2) - d.d_t) <= std::min(c.tol_range, c.tol_eq);
}

namespace {

BuildingDecision building_step_impl(const LateralDistances& d, const PixelObservation& center,
                                    std::optional<std::pair<double, double>> side_u, const BuildingState& state,
                                    const BuildingConfig& c) {
  BuildingDecision out;
  out.next = state;
  if (settle_conditions_hold(d, center, c)) {
    out.settled = true;
    return out;
  }

  const double e_c = center.u - c.principal_u;
  const double s = d.d_m1 - d.d_m2;
  // A pure rotation shifts the centre marker by e and the imbalance by -2e/3;
  // remove that so s_c only reflects the lateral offset.
  const double s_c = s + 2.0 / 3.0 * e_c;
  const double range = 0.5 * (d.d_m1 + d.d_m2) - d.d_t;
  // Hysteresis keeps pixel quantisation from toggling the mode every frame.
  // The mode is also frozen during in-place rotations, where quantisation of
  // the centre marker makes s_c jump by a pixel or so.
  const double exit_band = state.correcting_lateral ? 0.5 * c.tol_eq : c.tol_eq;
  const bool balanced = state.rotating ? !state.correcting_lateral : std::abs(s_c) <= exit_band;
  out.next.correcting_lateral = !balanced;

  if (balanced) {
    // Straight radial moves from the opposite beacon keep the balance.
    const double heading_err = std::atan(e_c / c.focal_px);
    if (std::abs(e_c) > c.tol_center) {
      out.cmd = rotate_in_place(heading_err, c);
      return out;
    }
    out.next.travel_dir = static_cast<int>(sign_or(range, state.travel_dir));
    const bool in_band = std::abs(d.d_m1 - d.d_t) <= c.tol_eq && std::abs(d.d_m2 - d.d_t) <= c.tol_eq &&
                         std::abs(range) <= std::min(c.tol_range, c.tol_eq);
    if (!in_band) {
      const double v = out.next.travel_dir * std::clamp(c.k_range * std::abs(range), c.v_min, c.v_max);
      out.cmd = {v, std::clamp(c.k_turn * heading_err, -c.omega_max, c.omega_max)};
      return out;
    }
    // Only the raw imbalance is off. A residual rotation explains it unless
    // the centre marker is already dead on, in which case resume the arcs.
    if (std::abs(e_c) > std::min(1.0, 0.5 * c.tol_eq)) {
      out.cmd = rotate_in_place(heading_err, c);
    } else {
      out.next.correcting_lateral = true;
    }
    return out;
  }

  // Arc toward the beacon with the larger disparity, reversing at the ends of
  // a range window that lies mostly beyond the vertex, where the side beacons
  // sit further inside the image.
  int dir = state.travel_dir;
  if (dir > 0 && range < -c.range_band_far) dir = -1;
  if (dir < 0 && range > c.range_band_near) dir = 1;
  out.next.travel_dir = dir;
  const double tilt = dir * std::clamp(c.k_tilt * s_c, -c.max_tilt, c.max_tilt);
  // Where the centre marker sits when the heading is `tilt` off the
  // longitudinal axis at this lateral offset.
  double e_des = -0.75 * s_c - c.focal_px * std::tan(tilt);
  // A rotation that moves the centre marker by de moves the side markers by
  // about 4/3 de; keep both side markers inside the image.
  if (side_u) {
    const double lo = (c.edge_margin - side_u->first) * 0.75 + e_c;
    const double hi = (c.image_width - 1.0 - c.edge_margin - side_u->second) * 0.75 + e_c;
    if (lo > hi) {
      // Too close to the base for any tilt: back away along the current line.
      out.next.travel_dir = 1;
      out.cmd = {c.v_lateral, std::clamp(c.k_turn * std::atan(e_c / c.focal_px), -c.omega_max, c.omega_max)};
      return out;
    }
    e_des = std::clamp(e_des, lo, hi);
  }
  const double heading_err = std::atan((e_c - e_des) / c.focal_px);
  if (std::abs(e_c - e_des) > c.tol_center) {
    out.cmd = rotate_in_place(heading_err, c);
    return out;
  }
  out.cmd = {dir * c.v_lateral, std::clamp(c.k_turn * heading_err, -c.omega_max, c.omega_max)};
  return out;
}

BuildingDecision finish(BuildingDecision dec) {
  dec.next.rotating = !dec.settled && dec.cmd.v == 0.0 && dec.cmd.omega != 0.0;
  return dec;
}

}  // namespace

BuildingDecision building_triangle_step(const LateralDistances& d, const PixelObservation& center,
                                        const BuildingState& state, const BuildingConfig& c) {
  return finish(building_step_impl(d, center, std::nullopt, state, c));
}

BuildingDecision building_triangle_step(const PixelObservation& center, const PixelObservation& left,
                                        const PixelObservation& right, const BuildingState& state,
                                        const BuildingConfig& c) {
  if (center.visible && left.visible && right.visible) {
    return finish(building_step_impl(lateral_distances(center, left, right, c.d_t), center,
                                     std::pair{std::min(left.u, right.u), std::max(left.u, right.u)}, state, c));
  }
  BuildingDecision out;
  out.next = state;
  if (!center.visible) {
    out.cmd = {0.0, c.omega_search};
  } else {
    // A side beacon is outside the view: too close to the base, or tilted.
    // Re-centre the opposite beacon while moving away from it.
    const double heading_err = std::atan((center.u - c.principal_u) / c.focal_px);
    if (std::abs(center.u - c.principal_u) > c.search_center_tol) {
      out.cmd = rotate_in_place(heading_err, c);
    } else {
      out.next.travel_dir = 1;
      out.cmd = {c.v_lateral, std::clamp(c.k_turn * heading_err, -c.omega_max, c.omega_max)};
    }
  }
  return finish(out);
}

ManeuverResult run_vertex_maneuver(const VertexManeuver& m, const ControlConfig& config,
                                   const CameraConfig& rear_camera, bool measurement_noise, std::uint64_t seed) {
  if (!(config.dt > 0.0) || !(config.frame_period > 0.0) || !(config.t_max > 0.0)) {
    throw std::invalid_argument("control timing parameters must be positive");
  }
  rear_camera.validate();
  const Vec2 far_side = midpoint(m.base_a, m.base_b) * 2.0 - m.opposite;
  const TriangleFrame frame = make_triangle_frame(m.base_a, m.base_b, far_side);
  const Vec2 left_axis = perp(frame.longitudinal_axis);
  const bool a_is_left = dot(m.base_a - frame.origin, left_axis) > 0.0;
  const Vec2 beacon_left = a_is_left ? m.base_a : m.base_b;
  const Vec2 beacon_right = a_is_left ? m.base_b : m.base_a;

  CameraConfig cam = rear_camera;
  cam.mount = CameraMount::kRear;
  if (!measurement_noise) {
    cam.quantize = false;
    cam.pixel_noise_std = 0.0;
  }
  Rng jitter(seed);

  std::vector<Vec2> gates = m.inner_path;
  if (gates.empty()) {
    gates.push_back(from_triangle_frame(frame, {0.0, distance(m.base_a, m.base_b) * std::numbers::sqrt3 / 2.0}));
  }
  // The front-camera approach lines up on the final leg with a lateral aiming
  // error; the rear-camera controller has to remove it.
  Rng aim_rng(derive_seed(seed, 0, 1));
  const double aim = aim_rng.normal(0.0, config.approach_aim_std);
  gates.back() += frame.lateral_axis * aim;
  if (gates.size() >= 2) gates[gates.size() - 2] += frame.lateral_axis * aim;

  ManeuverResult result;
  UnicycleState state{m.start, 0.148};
  ControllerPhase phase = ControllerPhase::kApproaching;
  std::size_t gate = 0;
  BuildingState bstate;
  WheelCommand cmd;
  double next_frame = 0.0;
  const auto n_steps = static_cast<long>(std::ceil(config.t_max / config.dt));
  if (config.record_trajectory) result.trajectory.reserve(4096);

  for (long k = 0; k <= n_steps; ++k) {
    const double t = k * config.dt;
    if (phase != ControllerPhase::kBuildingTriangle) {
      if (distance(state.pose.position(), gates[gate]) <= config.approach.capture_radius) {
        ++gate;
        if (phase == ControllerPhase::kApproaching) phase = ControllerPhase::kInnerTriangle;
      }
      const bool handoff = gate >= gates.size() ||
                           (gate + 1 == gates.size() &&
                            distance(state.pose.position(), gates.back()) <= config.handoff_radius);
      if (handoff) {
        phase = ControllerPhase::kBuildingTriangle;
        next_frame = t;
      } else {
        Vec2 aim = gates[gate];
        if (gate > 0 && gate + 1 == gates.size()) {
          aim = carrot_on_segment(state.pose.position(), gates[gate - 1], gates[gate], config.lookahead);
        }
        cmd = waypoint_follow(state, aim, config.approach);
      }
    }
    if (phase == ControllerPhase::kBuildingTriangle && t >= next_frame - 1e-9) {
      next_frame += config.frame_period;
      const PixelObservation c = project_marker(state.pose, cam, m.opposite, 3, &jitter);
      const PixelObservation l = project_marker(state.pose, cam, beacon_left, 1, &jitter);
      const PixelObservation r = project_marker(state.pose, cam, beacon_right, 2, &jitter);
      const BuildingDecision dec = building_triangle_step(c, l, r, bstate, config.building);
      if (dec.settled) {
        result.final_pose = state.pose;
        result.settle_time = t;
        result.final_distances = lateral_distances(c, l, r, config.building.d_t);
        result.final_center = c;
        if (config.record_trajectory) result.trajectory.push_back({t, state.pose, ControllerPhase::kSettled});
        return result;
      }
      cmd = dec.cmd;
      bstate = dec.next;
    }
    if (config.record_trajectory) result.trajectory.push_back({t, state.pose, phase});
    state = step_unicycle(state, cmd, config.dt);
  }
  throw ControllerTimeout("mover did not settle at its vertex within " + std::to_string(config.t_max) + " s");
}

}  // namespace trisim
