#include "trisim/scenario_file.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <map>
#include <sstream>
#include <string_view>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace trisim {

namespace {

class Reader {
 public:
  [[noreturn]] void fail(const std::string& path, const YAML::Node& node, const std::string& msg) const {
    const int line = node.Mark().line;
    if (line >= 0) throw ScenarioError(fmt::format("{} (line {}): {}", path, line + 1, msg));
    throw ScenarioError(fmt::format("{}: {}", path, msg));
  }

  /// Rejects keys outside `allowed` and remembers the line of every key.
  void check_map(const YAML::Node& map, const std::string& path, std::initializer_list<std::string_view> allowed) {
    if (!map.IsMap()) fail(path.empty() ? "scenario" : path, map, "expected a mapping");
    for (const auto& kv : map) {
      const std::string key = kv.first.as<std::string>();
      const std::string full = path.empty() ? key : path + "." + key;
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) fail(full, kv.first, "unknown key");
      lines_[full] = kv.first.Mark().line + 1;
    }
  }

  double number(const YAML::Node& n, const std::string& path) const {
    try {
      return n.as<double>();
    } catch (const YAML::Exception&) {
      fail(path, n, "expected a number");
    }
  }

  long long integer(const YAML::Node& n, const std::string& path) const {
    try {
      return n.as<long long>();
    } catch (const YAML::Exception&) {
      fail(path, n, "expected an integer");
    }
  }

  std::uint64_t unsigned_integer(const YAML::Node& n, const std::string& path) const {
    try {
      return n.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      fail(path, n, "expected a non-negative integer");
    }
  }

  std::size_t count(const YAML::Node& n, const std::string& path) const {
    const long long v = integer(n, path);
    if (v < 0) fail(path, n, "must be non-negative");
    return static_cast<std::size_t>(v);
  }

  bool boolean(const YAML::Node& n, const std::string& path) const {
    try {
      return n.as<bool>();
    } catch (const YAML::Exception&) {
      fail(path, n, "expected true or false");
    }
  }

  std::string text(const YAML::Node& n, const std::string& path) const {
    if (!n.IsScalar()) fail(path, n, "expected a string");
    return n.as<std::string>();
  }

  std::vector<double> numbers(const YAML::Node& n, const std::string& path, std::size_t lo, std::size_t hi) const {
    if (!n.IsSequence() || n.size() < lo || n.size() > hi) {
      fail(path, n, lo == hi ? fmt::format("expected a list of {} numbers", lo)
                             : fmt::format("expected a list of {} to {} numbers", lo, hi));
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < n.size(); ++i) out.push_back(number(n[i], path));
    return out;
  }

  Vec2 point(const YAML::Node& n, const std::string& path) const {
    const auto v = numbers(n, path, 2, 2);
    return {v[0], v[1]};
  }

  int line_of(const std::string& path) const {
    // Longest recorded prefix of the dotted path.
    for (std::string p = path;;) {
      auto it = lines_.find(p);
      if (it != lines_.end()) return it->second;
      const auto dot = p.rfind('.');
      if (dot == std::string::npos) return -1;
      p.resize(dot);
    }
  }

 private:
  std::map<std::string, int> lines_;
};

template <class F>
void with(const YAML::Node& map, const char* key, F&& f) {
  if (const YAML::Node n = map[key]) f(n);
}

void read_camera(Reader& r, const YAML::Node& n, CameraConfig& c) {
  r.check_map(n, "camera", {"focal_px", "image_width", "principal_u", "max_range", "quantize", "pixel_noise_std"});
  with(n, "focal_px", [&](const YAML::Node& v) { c.focal_px = r.number(v, "camera.focal_px"); });
  with(n, "image_width", [&](const YAML::Node& v) { c.image_width = r.number(v, "camera.image_width"); });
  with(n, "principal_u", [&](const YAML::Node& v) { c.principal_u = r.number(v, "camera.principal_u"); });
  with(n, "max_range", [&](const YAML::Node& v) { c.max_range = r.number(v, "camera.max_range"); });
  with(n, "quantize", [&](const YAML::Node& v) { c.quantize = r.boolean(v, "camera.quantize"); });
  with(n, "pixel_noise_std", [&](const YAML::Node& v) { c.pixel_noise_std = r.number(v, "camera.pixel_noise_std"); });
}

void read_noise(Reader& r, const YAML::Node& n, NoiseModels& m) {
  r.check_map(n, "noise", {"vertex", "heading", "wss"});
  with(n, "vertex", [&](const YAML::Node& v) {
    r.check_map(v, "noise.vertex", {"mu_lat", "sigma_lat", "mu_lon", "sigma_lon"});
    with(v, "mu_lat", [&](const YAML::Node& x) { m.vertex.mu_lat = r.number(x, "noise.vertex.mu_lat"); });
    with(v, "sigma_lat", [&](const YAML::Node& x) { m.vertex.sigma_lat = r.number(x, "noise.vertex.sigma_lat"); });
    with(v, "mu_lon", [&](const YAML::Node& x) { m.vertex.mu_lon = r.number(x, "noise.vertex.mu_lon"); });
    with(v, "sigma_lon", [&](const YAML::Node& x) { m.vertex.sigma_lon = r.number(x, "noise.vertex.sigma_lon"); });
  });
  with(n, "heading", [&](const YAML::Node& v) {
    r.check_map(v, "noise.heading", {"tau", "sigma_gm", "sigma_white", "gyro_bias_tau", "gyro_bias_sigma"});
    with(v, "tau", [&](const YAML::Node& x) { m.heading.tau = r.number(x, "noise.heading.tau"); });
    with(v, "sigma_gm", [&](const YAML::Node& x) { m.heading.sigma_gm = r.number(x, "noise.heading.sigma_gm"); });
    with(v, "sigma_white",
         [&](const YAML::Node& x) { m.heading.sigma_white = r.number(x, "noise.heading.sigma_white"); });
    with(v, "gyro_bias_tau",
         [&](const YAML::Node& x) { m.heading.gyro_bias_tau = r.number(x, "noise.heading.gyro_bias_tau"); });
    with(v, "gyro_bias_sigma",
         [&](const YAML::Node& x) { m.heading.gyro_bias_sigma = r.number(x, "noise.heading.gyro_bias_sigma"); });
  });
  with(n, "wss", [&](const YAML::Node& v) {
    r.check_map(v, "noise.wss", {"wheel_radius", "radius_bias", "scale_factor", "noise_std"});
    with(v, "wheel_radius", [&](const YAML::Node& x) { m.wss.wheel_radius = r.number(x, "noise.wss.wheel_radius"); });
    with(v, "radius_bias", [&](const YAML::Node& x) { m.wss.radius_bias = r.number(x, "noise.wss.radius_bias"); });
    with(v, "scale_factor", [&](const YAML::Node& x) { m.wss.scale_factor = r.number(x, "noise.wss.scale_factor"); });
    with(v, "noise_std", [&](const YAML::Node& x) { m.wss.noise_std = r.number(x, "noise.wss.noise_std"); });
  });
}

void read_micro(Reader& r, const YAML::Node& n, MicroSettings& m) {
  r.check_map(n, "micro",
              {"tol_eq", "tol_center", "approach_aim_std", "t_max", "measurement_noise", "trajectory_runs"});
  with(n, "tol_eq", [&](const YAML::Node& v) { m.tol_eq = r.number(v, "micro.tol_eq"); });
  with(n, "tol_center", [&](const YAML::Node& v) { m.tol_center = r.number(v, "micro.tol_center"); });
  with(n, "approach_aim_std", [&](const YAML::Node& v) { m.approach_aim_std = r.number(v, "micro.approach_aim_std"); });
  with(n, "t_max", [&](const YAML::Node& v) { m.t_max = r.number(v, "micro.t_max"); });
  with(n, "measurement_noise",
       [&](const YAML::Node& v) { m.measurement_noise = r.boolean(v, "micro.measurement_noise"); });
  with(n, "trajectory_runs", [&](const YAML::Node& v) { m.trajectory_runs = r.count(v, "micro.trajectory_runs"); });
}

void read_dr(Reader& r, const YAML::Node& n, DrSettings& d) {
  r.check_map(n, "dead_reckoning",
              {"curvature_gain", "max_curvature", "capture_radius", "lookahead", "record_period"});
  with(n, "curvature_gain", [&](const YAML::Node& v) { d.curvature_gain = r.number(v, "dead_reckoning.curvature_gain"); });
  with(n, "max_curvature", [&](const YAML::Node& v) { d.max_curvature = r.number(v, "dead_reckoning.max_curvature"); });
  with(n, "capture_radius",
       [&](const YAML::Node& v) { d.capture_radius = r.number(v, "dead_reckoning.capture_radius"); });
  with(n, "lookahead", [&](const YAML::Node& v) { d.lookahead = r.number(v, "dead_reckoning.lookahead"); });
  with(n, "record_period", [&](const YAML::Node& v) { d.record_period = r.number(v, "dead_reckoning.record_period"); });
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ScenarioError(fmt::format("scenario (line {}): {}", e.mark.line + 1, e.msg));
  }
  Reader r;
  Scenario s;
  if (!root.IsDefined() || root.IsNull()) throw ScenarioError("scenario: empty document");
  r.check_map(root, "", {"name", "mode", "robots", "side", "d_t", "camera", "waypoints", "destination", "obstacles",
                         "noise", "omega_wheel", "dt", "runs", "master_seed", "max_steps", "micro", "dead_reckoning"});
  with(root, "name", [&](const YAML::Node& v) { s.name = r.text(v, "name"); });
  with(root, "mode", [&](const YAML::Node& v) {
    const auto m = parse_mode(r.text(v, "mode"));
    if (!m) r.fail("mode", v, "expected micro, macro or dead_reckoning");
    s.mode = *m;
  });
  with(root, "side", [&](const YAML::Node& v) { s.side = r.number(v, "side"); });
  bool focal_given = false;
  with(root, "d_t", [&](const YAML::Node& v) { s.d_t = r.number(v, "d_t"); });
  with(root, "camera", [&](const YAML::Node& v) {
    focal_given = static_cast<bool>(v["focal_px"]);
    read_camera(r, v, s.camera);
  });
  if (!focal_given) s.camera.focal_px = focal_for_disparity(s.d_t);
  s.robots = standard_formation(s.side);
  with(root, "robots", [&](const YAML::Node& v) {
    if (!v.IsSequence()) r.fail("robots", v, "expected a list of [x, y] or [x, y, heading]");
    s.robots.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto p = r.numbers(v[i], "robots", 2, 3);
      s.robots.emplace_back(p[0], p[1], p.size() == 3 ? p[2] : 0.0);
    }
  });
  with(root, "waypoints", [&](const YAML::Node& v) {
    if (!v.IsSequence()) r.fail("waypoints", v, "expected a list of [x, y]");
    for (std::size_t i = 0; i < v.size(); ++i) s.waypoints.push_back(r.point(v[i], "waypoints"));
  });
  with(root, "destination", [&](const YAML::Node& v) { s.destination = r.point(v, "destination"); });
  with(root, "obstacles", [&](const YAML::Node& v) {
    if (!v.IsSequence()) r.fail("obstacles", v, "expected a list");
    for (std::size_t i = 0; i < v.size(); ++i) {
      r.check_map(v[i], "obstacles", {"center", "radius", "safety_margin"});
      Obstacle o;
      if (!v[i]["center"]) r.fail("obstacles.center", v[i], "missing");
      o.center = r.point(v[i]["center"], "obstacles.center");
      with(v[i], "radius", [&](const YAML::Node& x) { o.radius = r.number(x, "obstacles.radius"); });
      with(v[i], "safety_margin",
           [&](const YAML::Node& x) { o.safety_margin = r.number(x, "obstacles.safety_margin"); });
      s.obstacles.push_back(o);
    }
  });
  with(root, "noise", [&](const YAML::Node& v) { read_noise(r, v, s.noise); });
  with(root, "omega_wheel", [&](const YAML::Node& v) { s.omega_wheel = r.number(v, "omega_wheel"); });
  with(root, "dt", [&](const YAML::Node& v) { s.dt = r.number(v, "dt"); });
  with(root, "runs", [&](const YAML::Node& v) { s.runs = r.count(v, "runs"); });
  with(root, "master_seed", [&](const YAML::Node& v) { s.master_seed = r.unsigned_integer(v, "master_seed"); });
  with(root, "max_steps", [&](const YAML::Node& v) { s.max_steps = r.count(v, "max_steps"); });
  with(root, "micro", [&](const YAML::Node& v) { read_micro(r, v, s.micro); });
  with(root, "dead_reckoning", [&](const YAML::Node& v) { read_dr(r, v, s.dr); });

  try {
    s.validate();
  } catch (const ScenarioError& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    const int line = colon == std::string::npos ? -1 : r.line_of(msg.substr(0, colon));
    if (line > 0) {
      throw ScenarioError(fmt::format("{} (line {}){}", msg.substr(0, colon), line, msg.substr(colon)));
    }
    throw;
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(fmt::format("{}: cannot open scenario file", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

namespace {

void emit_point(YAML::Emitter& e, Vec2 p) {
  e << YAML::Flow << YAML::BeginSeq << p.x << p.y << YAML::EndSeq;
}

}  // namespace

std::string serialize_scenario(const Scenario& s) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  e << YAML::Key << "name" << YAML::Value << s.name;
  e << YAML::Key << "mode" << YAML::Value << to_string(s.mode);
  e << YAML::Key << "side" << YAML::Value << s.side;
  e << YAML::Key << "d_t" << YAML::Value << s.d_t;
  e << YAML::Key << "omega_wheel" << YAML::Value << s.omega_wheel;
  e << YAML::Key << "dt" << YAML::Value << s.dt;
  e << YAML::Key << "runs" << YAML::Value << s.runs;
  e << YAML::Key << "master_seed" << YAML::Value << s.master_seed;
  e << YAML::Key << "max_steps" << YAML::Value << s.max_steps;
  e << YAML::Key << "robots" << YAML::Value << YAML::BeginSeq;
  for (const Pose2D& p : s.robots) {
    e << YAML::Flow << YAML::BeginSeq << p.x() << p.y() << p.heading() << YAML::EndSeq;
  }
  e << YAML::EndSeq;
  e << YAML::Key << "waypoints" << YAML::Value << YAML::BeginSeq;
  for (const Vec2& w : s.waypoints) emit_point(e, w);
  e << YAML::EndSeq;
  if (s.destination) {
    e << YAML::Key << "destination" << YAML::Value;
    emit_point(e, *s.destination);
  }
  e << YAML::Key << "obstacles" << YAML::Value << YAML::BeginSeq;
  for (const Obstacle& o : s.obstacles) {
    e << YAML::BeginMap << YAML::Key << "center" << YAML::Value;
    emit_point(e, o.center);
    e << YAML::Key << "radius" << YAML::Value << o.radius;
    e << YAML::Key << "safety_margin" << YAML::Value << o.safety_margin << YAML::EndMap;
  }
  e << YAML::EndSeq;
  const CameraConfig& c = s.camera;
  e << YAML::Key << "camera" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "focal_px" << YAML::Value << c.focal_px;
  e << YAML::Key << "image_width" << YAML::Value << c.image_width;
  e << YAML::Key << "principal_u" << YAML::Value << c.principal_u;
  e << YAML::Key << "max_range" << YAML::Value << c.max_range;
  e << YAML::Key << "quantize" << YAML::Value << c.quantize;
  e << YAML::Key << "pixel_noise_std" << YAML::Value << c.pixel_noise_std;
  e << YAML::EndMap;
  const NoiseModels& n = s.noise;
  e << YAML::Key << "noise" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "vertex" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "mu_lat" << YAML::Value << n.vertex.mu_lat;
  e << YAML::Key << "sigma_lat" << YAML::Value << n.vertex.sigma_lat;
  e << YAML::Key << "mu_lon" << YAML::Value << n.vertex.mu_lon;
  e << YAML::Key << "sigma_lon" << YAML::Value << n.vertex.sigma_lon;
  e << YAML::EndMap;
  e << YAML::Key << "heading" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "tau" << YAML::Value << n.heading.tau;
  e << YAML::Key << "sigma_gm" << YAML::Value << n.heading.sigma_gm;
  e << YAML::Key << "sigma_white" << YAML::Value << n.heading.sigma_white;
  e << YAML::Key << "gyro_bias_tau" << YAML::Value << n.heading.gyro_bias_tau;
  e << YAML::Key << "gyro_bias_sigma" << YAML::Value << n.heading.gyro_bias_sigma;
  e << YAML::EndMap;
  e << YAML::Key << "wss" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "wheel_radius" << YAML::Value << n.wss.wheel_radius;
  e << YAML::Key << "radius_bias" << YAML::Value << n.wss.radius_bias;
  e << YAML::Key << "scale_factor" << YAML::Value << n.wss.scale_factor;
  e << YAML::Key << "noise_std" << YAML::Value << n.wss.noise_std;
  e << YAML::EndMap;
  e << YAML::EndMap;
  e << YAML::Key << "micro" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "tol_eq" << YAML::Value << s.micro.tol_eq;
  e << YAML::Key << "tol_center" << YAML::Value << s.micro.tol_center;
  e << YAML::Key << "approach_aim_std" << YAML::Value << s.micro.approach_aim_std;
  e << YAML::Key << "t_max" << YAML::Value << s.micro.t_max;
  e << YAML::Key << "measurement_noise" << YAML::Value << s.micro.measurement_noise;
  e << YAML::Key << "trajectory_runs" << YAML::Value << s.micro.trajectory_runs;
  e << YAML::EndMap;
  e << YAML::Key << "dead_reckoning" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "curvature_gain" << YAML::Value << s.dr.curvature_gain;
  e << YAML::Key << "max_curvature" << YAML::Value << s.dr.max_curvature;
  e << YAML::Key << "capture_radius" << YAML::Value << s.dr.capture_radius;
  e << YAML::Key << "lookahead" << YAML::Value << s.dr.lookahead;
  e << YAML::Key << "record_period" << YAML::Value << s.dr.record_period;
  e << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace trisim
