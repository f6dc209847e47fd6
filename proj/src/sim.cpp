#include "trisim/sim.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>

namespace trisim {

namespace {

// Stream ids for derive_seed; maneuver streams are offset by the step index.
constexpr std::uint64_t kStreamVertexError = 1;
constexpr std::uint64_t kStreamHeading = 2;
constexpr std::uint64_t kStreamWss = 3;
constexpr std::uint64_t kStreamManeuver = 1000;

constexpr int kMaxPlacementDraws = 1000;

std::vector<Vec2> positions_of(std::span<const Pose2D> poses) {
  std::vector<Vec2> out;
  out.reserve(poses.size());
  for (const Pose2D& p : poses) out.push_back(p.position());
  return out;
}

/// Waypoints followed by the goal when it is not the last waypoint.
std::vector<Vec2> route(const Scenario& s) {
  std::vector<Vec2> r = s.waypoints;
  if (s.destination && distance(*s.destination, r.back()) > 1e-9) r.push_back(*s.destination);
  return r;
}

struct Formation {
  TriangularLattice lattice;
  std::vector<Vec2> ideal;
  std::vector<Pose2D> actual;
};

/// Rounded start positions are accepted within this distance of the lattice.
constexpr double kSnapTolerance = 0.005;

Formation init_formation(const Scenario& s) {
  const std::vector<Vec2> p = positions_of(s.robots);
  PlannerConfig pc;
  pc.side = s.side;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      for (std::size_t k = j + 1; k < p.size(); ++k) {
        const std::array<std::size_t, 3> t{i, j, k};
        bool formed = true;
        std::size_t best = 0;
        for (std::size_t e = 0; e < 3; ++e) {
          const double err = std::abs(distance(p[t[e]], p[t[(e + 1) % 3]]) - s.side);
          formed = formed && err <= pc.tol_form;
          const double best_err = std::abs(distance(p[t[best]], p[t[(best + 1) % 3]]) - s.side);
          if (err < best_err) best = e;
        }
        if (!formed) continue;
        // Exact lattice on the edge closest to L, scaled to L.
        const Vec2 a = p[t[best]];
        const Vec2 b = a + unit(p[t[(best + 1) % 3]] - a) * s.side;
        const Vec2 c = p[t[(best + 2) % 3]];
        const Side side = cross(b - a, c - a) > 0.0 ? Side::kLeft : Side::kRight;
        Formation f{TriangularLattice::from_triangle(a, b, third_vertex(a, b, side)), {}, {}};
        for (const Pose2D& q : s.robots) {
          const Vec2 snapped = f.lattice.point(f.lattice.nearest(q.position()));
          if (distance(snapped, q.position()) > kSnapTolerance) {
            throw ScenarioError("robots: initial positions do not lie on one triangular lattice of side L");
          }
          f.ideal.push_back(snapped);
          f.actual.emplace_back(snapped, q.heading());
        }
        return f;
      }
    }
  }
  throw ScenarioError("robots: no three robots form an equilateral triangle of side L");
}

struct Placement {
  Pose2D pose;
  double e_lat = 0.0;
  double e_lon = 0.0;
  double duration = 0.0;
  std::vector<TrajectorySample> trajectory;
};

struct BeaconGeometry {
  Vec2 a;
  Vec2 b;
  Vec2 o;
  Vec2 apex;
  TriangleFrame frame;
};

BeaconGeometry realised_beacons(const Formation& f, const BeaconTriangle& bt) {
  BeaconGeometry g;
  g.a = f.actual[bt.base_a].position();
  g.b = f.actual[bt.base_b].position();
  g.o = f.actual[bt.opposite].position();
  const Side side = cross(g.b - g.a, g.o - g.a) > 0.0 ? Side::kRight : Side::kLeft;
  g.apex = third_vertex(g.a, g.b, side);
  g.frame = make_triangle_frame(g.a, g.b, g.apex);
  return g;
}

double path_length(Vec2 start, std::span<const Vec2> path) {
  double len = 0.0;
  Vec2 prev = start;
  for (const Vec2& p : path) {
    len += distance(prev, p);
    prev = p;
  }
  return len;
}

/// Shared plan/place loop of macro and micro mode.
template <class Place>
RunRecord run_formation(const Scenario& s, std::size_t run_index, Mode mode, Place&& place) {
  s.validate();
  Formation f = init_formation(s);
  PlannerConfig pc;
  pc.side = s.side;
  RunRecord rec;
  rec.run_index = run_index;
  rec.mode = mode;
  const std::vector<Vec2> goals = route(s);
  std::size_t steps = 0;
  for (const Vec2& goal : goals) {
    while (!destination_reached(f.ideal, f.lattice, goal)) {
      if (steps >= s.max_steps) {
        throw PlanningError("formation did not reach its destination within max_steps");
      }
      const PlanStep plan = plan_n_robot_step(f.ideal, goal, s.obstacles, pc);
      const Vec2 ideal_vertex = f.lattice.point(f.lattice.nearest(plan.target_vertex));
      Placement pl = place(f, plan, steps);
      StepRecord sr;
      sr.step = steps;
      sr.mover_id = plan.moving_robot;
      sr.ideal = ideal_vertex;
      sr.actual = pl.pose.position();
      sr.e_lat = pl.e_lat;
      sr.e_lon = pl.e_lon;
      rec.steps.push_back(sr);
      rec.travel_time += pl.duration;
      if (!pl.trajectory.empty()) rec.maneuvers.push_back(std::move(pl.trajectory));
      f.ideal[plan.moving_robot] = ideal_vertex;
      f.actual[plan.moving_robot] = pl.pose;
      ++steps;
    }
  }
  rec.triangle_count = steps;
  const Vec2 final_vertex = f.lattice.point(f.lattice.nearest(goals.back()));
  for (std::size_t i = 0; i < f.ideal.size(); ++i) {
    if (distance(f.ideal[i], final_vertex) < 1e-6) {
      rec.final_error = distance(f.actual[i].position(), f.ideal[i]);
    }
  }
  return rec;
}

double nominal_speed(const Scenario& s) { return s.noise.wss.nominal_speed(s.omega_wheel); }

}  // namespace

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::kMicro:
      return "micro";
    case Mode::kMacro:
      return "macro";
    case Mode::kDeadReckoning:
      return "dead_reckoning";
  }
  return "unknown";
}

std::optional<Mode> parse_mode(const std::string& text) {
  if (text == "micro") return Mode::kMicro;
  if (text == "macro") return Mode::kMacro;
  if (text == "dead_reckoning") return Mode::kDeadReckoning;
  return std::nullopt;
}

void Scenario::validate() const {
  if (runs < 1) throw ScenarioError("runs: must be at least 1");
  if (!(side > 0.0)) throw ScenarioError("side: must be positive");
  if (!(d_t > 0.0)) throw ScenarioError("d_t: must be positive");
  if (waypoints.empty()) throw ScenarioError("waypoints: at least one waypoint is required");
  if (!(dt > 0.0)) throw ScenarioError("dt: must be positive");
  if (!(omega_wheel > 0.0)) throw ScenarioError("omega_wheel: must be positive");
  if (max_steps < 1) throw ScenarioError("max_steps: must be at least 1");
  if (mode != Mode::kDeadReckoning && robots.size() < 4) {
    throw ScenarioError("robots: a formation needs at least four robots");
  }
  if (!(dr.record_period > 0.0)) throw ScenarioError("dead_reckoning.record_period: must be positive");
  if (!(dr.lookahead > 0.0)) throw ScenarioError("dead_reckoning.lookahead: must be positive");
  if (!(dr.capture_radius > 0.0)) throw ScenarioError("dead_reckoning.capture_radius: must be positive");
  if (!(micro.t_max > 0.0)) throw ScenarioError("micro.t_max: must be positive");
  for (const Obstacle& o : obstacles) {
    if (!(o.radius >= 0.0) || !(o.safety_margin >= 0.0)) {
      throw ScenarioError("obstacles: radius and safety_margin must be non-negative");
    }
  }
  try {
    camera.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(std::string("camera: ") + e.what());
  }
  try {
    noise.vertex.validate();
    noise.heading.validate();
    noise.wss.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(std::string("noise: ") + e.what());
  }
  if (mode != Mode::kDeadReckoning) init_formation(*this);
}

std::vector<Pose2D> standard_formation(double side) {
  const double h = side * std::numbers::sqrt3 / 2.0;
  return {Pose2D(side / 2.0, 0.0, 0.0), Pose2D(0.0, h, 0.0), Pose2D(1.5 * side, 0.0, 0.0), Pose2D(side, h, 0.0)};
}

std::vector<Pose2D> extend_formation(std::span<const Pose2D> robots, std::size_t n, Vec2 away_from, double side) {
  std::vector<Pose2D> out(robots.begin(), robots.end());
  PlannerConfig pc;
  pc.side = side;
  while (out.size() < n) {
    const std::vector<Vec2> p = positions_of(out);
    std::vector<Vec2> with_probe = p;
    with_probe.push_back(away_from + Vec2{1e6, 1e6});  // never part of a triangle
    const auto cands = candidate_vertices(with_probe, with_probe.size() - 1, pc);
    if (cands.empty()) throw ScenarioError("robots: formation cannot be extended");
    const auto far = std::max_element(cands.begin(), cands.end(), [&](const Candidate& a, const Candidate& b) {
      return distance(a.vertex, away_from) < distance(b.vertex, away_from);
    });
    out.emplace_back(far->vertex, out.front().heading());
  }
  return out;
}

RunRecord run_macro(const Scenario& s, std::size_t run_index) {
  Rng rng(derive_seed(s.master_seed, run_index, kStreamVertexError));
  const double speed = nominal_speed(s);
  return run_formation(s, run_index, Mode::kMacro, [&](const Formation& f, const PlanStep& plan, std::size_t) {
    const BeaconGeometry g = realised_beacons(f, plan.beacons);
    Placement pl;
    for (int draw = 0;; ++draw) {
      const VertexError e = sample_vertex_error(s.noise.vertex, rng);
      const Vec2 placed = g.apex + g.frame.lateral_axis * e.lateral + g.frame.longitudinal_axis * e.longitudinal;
      // d_t fixes the side length in absolute terms, so a vertex whose new
      // edges miss L by more than tol_form is not accepted as formed; the
      // maneuver is repeated.
      const bool formed = std::abs(distance(g.a, placed) - s.side) <= kTolForm &&
                          std::abs(distance(g.b, placed) - s.side) <= kTolForm;
      if (formed || draw + 1 >= kMaxPlacementDraws) {
        const Vec2 facing = g.frame.longitudinal_axis;
        pl.pose = Pose2D(placed, std::atan2(facing.y, facing.x));
        pl.e_lat = e.lateral;
        pl.e_lon = e.longitudinal;
        break;
      }
    }
    const Vec2 start = f.actual[plan.moving_robot].position();
    pl.duration = path_length(start, plan.inner_path) / speed;
    return pl;
  });
}

RunRecord run_micro(const Scenario& s, std::size_t run_index) {
  ControlConfig cc;
  cc.approach = WaypointGains::speed_invariant(nominal_speed(s), 2.0, 1.5, 0.05);
  cc.building.d_t = s.d_t;
  cc.building.focal_px = s.camera.focal_px;
  cc.building.principal_u = s.camera.principal_u;
  cc.building.image_width = s.camera.image_width;
  cc.building.tol_eq = s.micro.tol_eq;
  cc.building.tol_center = s.micro.tol_center;
  cc.dt = s.dt;
  cc.t_max = s.micro.t_max;
  cc.approach_aim_std = s.micro.approach_aim_std;
  cc.record_trajectory = run_index < s.micro.trajectory_runs;
  PlannerConfig pc;
  pc.side = s.side;
  return run_formation(s, run_index, Mode::kMicro, [&](const Formation& f, const PlanStep& plan, std::size_t step) {
    const BeaconGeometry g = realised_beacons(f, plan.beacons);
    const std::vector<Vec2> actual = positions_of(f.actual);
    const Candidate realised{g.apex, plan.beacons, {g.a, g.b, g.o}};
    VertexManeuver m{f.actual[plan.moving_robot], g.a, g.b, g.o,
                     formation_path(actual, plan.moving_robot, realised, pc)};
    const ManeuverResult r = run_vertex_maneuver(m, cc, s.camera, s.micro.measurement_noise,
                                                 derive_seed(s.master_seed, run_index, kStreamManeuver + step));
    Placement pl;
    pl.pose = r.final_pose;
    const FrameCoords ideal = to_triangle_frame(g.frame, g.apex);
    const FrameCoords got = to_triangle_frame(g.frame, r.final_pose.position());
    pl.e_lat = got.lateral - ideal.lateral;
    pl.e_lon = got.longitudinal - ideal.longitudinal;
    pl.duration = r.settle_time;
    pl.trajectory = r.trajectory;
    return pl;
  });
}

RunRecord run_dead_reckoning(const Scenario& s, std::size_t run_index) {
  s.validate();
  const HeadingErrorParams& hp = s.noise.heading;
  const WssParams& wp = s.noise.wss;
  const double speed = nominal_speed(s);
  const WaypointGains gains =
      WaypointGains::speed_invariant(speed, s.dr.curvature_gain, s.dr.max_curvature, s.dr.capture_radius);
  const std::vector<Vec2> goals = route(s);
  Rng heading_rng(derive_seed(s.master_seed, run_index, kStreamHeading));
  Rng wss_rng(derive_seed(s.master_seed, run_index, kStreamWss));

  double initial_heading = 0.0;
  if (goals.size() > 1) {
    const Vec2 d = goals[1] - goals[0];
    initial_heading = std::atan2(d.y, d.x);
  }
  UnicycleState truth{Pose2D(goals[0], initial_heading), wp.wheel_radius};
  Vec2 est = goals[0];
  // The heading is aligned at the start; the gyro rate bias is not.
  double gm = 0.0;
  double bias = heading_rng.normal(0.0, hp.gyro_bias_sigma);
  double drift = 0.0;
  double est_heading = initial_heading;
  const double gain_per_rad_s = speed / s.omega_wheel;

  RunRecord rec;
  rec.run_index = run_index;
  rec.mode = Mode::kDeadReckoning;
  auto record = [&](double t) {
    rec.ticks.push_back({t, truth.pose, Pose2D(est, est_heading), distance(truth.pose.position(), est)});
  };
  record(0.0);
  std::size_t segment = 0;
  const auto record_every = std::max<long>(1, std::lround(s.dr.record_period / s.dt));
  const auto max_ticks = static_cast<long>(std::ceil(3600.0 / s.dt));
  long tick = 0;
  for (;;) {
    const WheelCommand cmd = path_follow(truth, goals, segment, s.dr.lookahead, gains);
    if (cmd.v == 0.0 && cmd.omega == 0.0) break;
    if (tick >= max_ticks) throw SimulationError(run_index, "dead-reckoning robot did not finish its route");
    // Commanded wheel rate for this forward speed, as seen by the wheel sensor.
    const double omega_cmd = cmd.v / gain_per_rad_s;
    const double v_meas = cmd.v > 0.0 ? wss_measure(omega_cmd, wp, wss_rng) : 0.0;
    gm = gm_step(gm, s.dt, hp, heading_rng);
    bias = gm_step(bias, s.dt, hp.gyro_bias_tau, hp.gyro_bias_sigma, heading_rng);
    drift += bias * s.dt;
    est_heading = normalize_angle(truth.pose.heading() + read_heading_error(gm, hp, heading_rng) + drift);
    est += heading_vector(est_heading) * (v_meas * s.dt);
    truth = step_unicycle(truth, cmd, s.dt);
    ++tick;
    if (tick % record_every == 0) record(tick * s.dt);
  }
  if (tick % record_every != 0) record(tick * s.dt);
  rec.travel_time = tick * s.dt;
  rec.final_error = distance(truth.pose.position(), est);
  return rec;
}

RunRecord run_once(const Scenario& s, std::size_t run_index) {
  switch (s.mode) {
    case Mode::kMicro:
      return run_micro(s, run_index);
    case Mode::kMacro:
      return run_macro(s, run_index);
    case Mode::kDeadReckoning:
      return run_dead_reckoning(s, run_index);
  }
  throw ScenarioError("mode: unknown");
}

std::size_t worker_count() {
  if (const char* env = std::getenv("TRISIM_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && n > 0) return static_cast<std::size_t>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

MagnitudeStats magnitude_stats(std::span<const double> values) {
  MagnitudeStats m;
  if (values.empty()) return m;
  double sum = 0.0;
  for (double v : values) sum += v;
  m.mean = sum / double(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.std = std::sqrt(ss / double(values.size() - 1));
  }
  return m;
}

AggregateReport monte_carlo(const Scenario& s) {
  s.validate();
  std::vector<RunRecord> records(s.runs);
  std::vector<std::exception_ptr> errors(s.runs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < s.runs; i = next++) {
      try {
        records[i] = run_once(s, i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_workers = std::min(worker_count(), s.runs);
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < s.runs; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const SimulationError&) {
      throw;
    } catch (const ScenarioError&) {
      throw;
    } catch (const std::exception& e) {
      throw SimulationError(i, e.what());
    }
  }

  AggregateReport rep;
  rep.mode = s.mode;
  rep.runs = s.runs;
  std::vector<double> finals;
  std::vector<double> lat;
  std::vector<double> lon;
  double k_sum = 0.0;
  double t_sum = 0.0;
  for (const RunRecord& r : records) {
    finals.push_back(r.final_error);
    k_sum += double(r.triangle_count);
    t_sum += r.travel_time;
    for (const StepRecord& st : r.steps) {
      lat.push_back(std::abs(st.e_lat));
      lon.push_back(std::abs(st.e_lon));
    }
  }
  rep.final_error = magnitude_stats(finals);
  rep.mean_triangle_count = k_sum / double(s.runs);
  rep.mean_travel_time = t_sum / double(s.runs);
  rep.step_lat = magnitude_stats(lat);
  rep.step_lon = magnitude_stats(lon);
  rep.records = std::move(records);
  return rep;
}

std::vector<CompareCell> compare_methods(std::span<const Scenario> scenarios, std::span<const double> omegas) {
  std::vector<CompareCell> out;
  for (const Scenario& base : scenarios) {
    for (double omega : omegas) {
      Scenario s = base;
      s.omega_wheel = omega;
      CompareCell cell;
      cell.trajectory = base.name;
      cell.omega_wheel = omega;
      s.mode = Mode::kMacro;
      cell.proposed = monte_carlo(s);
      s.mode = Mode::kDeadReckoning;
      cell.dead_reckoning = monte_carlo(s);
      out.push_back(std::move(cell));
    }
  }
  return out;
}

std::vector<SweepPoint> scalability_sweep(const Scenario& scenario, std::span<const std::size_t> n_values) {
  std::vector<SweepPoint> out;
  const std::vector<Vec2> goals = route(scenario);
  const Vec2 heading_to = goals.size() > 1 ? goals[1] : goals[0];
  for (std::size_t n : n_values) {
    if (n < 4) throw ScenarioError("n: every formation size must be at least 4");
    Scenario s = scenario;
    s.mode = Mode::kMacro;
    if (n > s.robots.size()) {
      s.robots = extend_formation(scenario.robots, n, heading_to, scenario.side);
    } else if (n < s.robots.size()) {
      s.robots.resize(n);
    }
    out.push_back({n, monte_carlo(s)});
  }
  return out;
}

std::vector<ManeuverSample> micro_error_samples(const Scenario& scenario, std::size_t count) {
  Scenario s = scenario;
  s.mode = Mode::kMicro;
  s.micro.trajectory_runs = 0;
  std::vector<ManeuverSample> out;
  for (std::size_t run = 0; out.size() < count; ++run) {
    const RunRecord r = run_micro(s, run);
    if (r.steps.empty()) throw SimulationError(run, "micro run produced no maneuvers");
    for (const StepRecord& st : r.steps) {
      if (out.size() == count) break;
      out.push_back({out.size(), st.e_lat, st.e_lon, std::hypot(st.e_lat, st.e_lon)});
    }
  }
  return out;
}

}  // namespace trisim
