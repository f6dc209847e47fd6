// Acceptance checks: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "trisim/noise.hpp"
#include "trisim/planner.hpp"
#include "trisim/scenario_file.hpp"
#include "trisim/sim.hpp"

using namespace trisim;
namespace fs = std::filesystem;

namespace {

constexpr double kH = 1.299038105676658;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Scenario bundled(const char* name) { return load_scenario(fs::path(TRISIM_SOURCE_DIR) / "scenarios" / name); }

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

double std_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / double(v.size() - 1));
}

Outcome wss_model() {
  WssParams quiet;
  quiet.noise_std = 0.0;
  Rng rng(derive_seed(42, 0, 3));
  const double exact = wss_measure(5.8, quiet, rng);
  const WssParams p;
  double sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) sum += wss_measure(5.8, p, rng);
  const double bound = 3.0 * 0.045 / std::sqrt(double(n));
  const double mean = sum / n;
  return {std::abs(exact - 0.148 * 1.16 * 5.8) < 1e-12 && std::abs(exact - 0.99568) < 1e-4 && std::abs(mean - exact) <= bound,
          fmt("noise-free %.9g m/s, mean of 1e4 %.6f m/s (bound +/-%.5f)", exact, mean, bound)};
}

Outcome gauss_markov() {
  const HeadingErrorParams p;
  const double dt = 1.0;
  const int n = 1000000;
  const auto lag = static_cast<std::size_t>(p.tau / dt);
  Rng rng(derive_seed(42, 0, 2));
  std::vector<double> x(n);
  x[0] = rng.normal(0.0, p.sigma_gm);
  for (int i = 1; i < n; ++i) x[i] = gm_step(x[i - 1], dt, p, rng);
  const double m = mean_of(x);
  double var = 0.0;
  double cov = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    var += (x[i] - m) * (x[i] - m);
    if (i + lag < x.size()) cov += (x[i] - m) * (x[i + lag] - m);
  }
  const double sd = std::sqrt(var / n);
  const double rho = cov / var;
  const double sd_deg = sd * 180.0 / std::numbers::pi;
  return {std::abs(sd_deg - 2.5) <= 0.05 * 2.5 && std::abs(rho - std::exp(-1.0)) <= 0.05,
          fmt("std %.4f deg (target 2.5 +/-5%%), lag-tau autocorrelation %.4f (target %.4f +/-0.05)", sd_deg, rho,
              std::exp(-1.0))};
}

Outcome vertex_sampler() {
  const VertexErrorModel m;
  Rng rng(derive_seed(42, 0, 1));
  std::vector<double> lat;
  std::vector<double> lon;
  for (int i = 0; i < 100000; ++i) {
    const VertexError e = sample_vertex_error(m, rng);
    lat.push_back(std::abs(e.lateral) * 1000.0);
    lon.push_back(std::abs(e.longitudinal) * 1000.0);
  }
  const double ml = mean_of(lat), sl = std_of(lat), mo = mean_of(lon), so = std_of(lon);
  return {std::abs(ml - 36) <= 1 && std::abs(sl - 21) <= 2 && std::abs(mo - 13) <= 0.5 && std::abs(so - 9) <= 1,
          fmt("|e_lat| %.2f/%.2f mm, |e_lon| %.2f/%.2f mm (mean/std)", ml, sl, mo, so)};
}

Outcome closed_loop() {
  Scenario s = bundled("turns.yaml");
  Scenario exact = s;
  exact.micro.measurement_noise = false;
  exact.micro.tol_eq = 0.25;
  exact.micro.approach_aim_std = 0.0;
  exact.camera.quantize = false;
  const auto clean = micro_error_samples(exact, 100);
  const auto within = std::count_if(clean.begin(), clean.end(), [](const ManeuverSample& m) { return m.magnitude < 0.005; });

  const auto noisy = micro_error_samples(s, 100);
  double sum = 0.0;
  int lat_dominant = 0;
  for (const ManeuverSample& m : noisy) {
    sum += m.magnitude;
    if (std::abs(m.e_lat) > std::abs(m.e_lon)) ++lat_dominant;
  }
  const double mean_mm = 1000.0 * sum / double(noisy.size());
  return {within == 100 && mean_mm >= 15.0 && mean_mm <= 60.0 && lat_dominant >= 80,
          fmt("exact camera: %d/100 within 5 mm; quantized: mean %.1f mm, lateral dominant in %d/100",
              int(within), mean_mm, lat_dominant)};
}

Outcome omega_invariance() {
  const Scenario fast = bundled("turns.yaml");
  Scenario slow = fast;
  slow.omega_wheel = 2.9;
  const AggregateReport a = monte_carlo(fast);
  const AggregateReport b = monte_carlo(slow);
  bool identical = a.records.size() == b.records.size();
  for (std::size_t i = 0; identical && i < a.records.size(); ++i) {
    identical = a.records[i].final_error == b.records[i].final_error &&
                a.records[i].steps.size() == b.records[i].steps.size();
    for (std::size_t k = 0; identical && k < a.records[i].steps.size(); ++k) {
      identical = a.records[i].steps[k].actual == b.records[i].steps[k].actual;
    }
  }
  slow.master_seed = fast.master_seed + 1;
  const double other = monte_carlo(slow).final_error.mean;
  const double rel = std::abs(other - a.final_error.mean) / a.final_error.mean;
  return {identical && rel <= 0.2, fmt("bit-identical %s; seeds 42 vs 43: %.4f vs %.4f m (%.1f%% apart)",
                                       identical ? "yes" : "no", a.final_error.mean, other, 100.0 * rel)};
}

Outcome dr_time_dependence() {
  bool ok = true;
  std::string detail;
  for (const char* name : {"turns.yaml", "patrol.yaml"}) {
    Scenario fast = bundled(name);
    fast.mode = Mode::kDeadReckoning;
    Scenario slow = fast;
    slow.omega_wheel = 2.9;
    const AggregateReport a = monte_carlo(fast);
    const AggregateReport b = monte_carlo(slow);
    const double t_ratio = b.mean_travel_time / a.mean_travel_time;
    const double e_ratio = b.final_error.mean / a.final_error.mean;
    ok = ok && std::abs(t_ratio - 2.0) <= 0.1 && e_ratio >= 1.6 && e_ratio <= 2.4;
    detail += fmt("%s: time x%.3f, error x%.3f; ", fast.name.c_str(), t_ratio, e_ratio);
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

Outcome method_ordering() {
  const std::vector<Scenario> scenarios{bundled("turns.yaml"), bundled("patrol.yaml")};
  const std::vector<double> omegas{5.8, 2.9};
  bool ok = true;
  std::string detail;
  for (const CompareCell& c : compare_methods(scenarios, omegas)) {
    ok = ok && c.proposed.final_error.mean < c.dead_reckoning.final_error.mean;
    detail += fmt("%s@%.1f %.3f<%.3f; ", c.trajectory.c_str(), c.omega_wheel, c.proposed.final_error.mean,
                  c.dead_reckoning.final_error.mean);
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

Outcome accumulation_law() {
  Scenario s;
  s.name = "corridor";
  s.robots = standard_formation(1.5);
  s.waypoints = {{17.25, 0.65}};  // 20 rightward steps
  s.runs = 100;
  const AggregateReport rep = monte_carlo(s);
  std::size_t k_max = rep.records.front().steps.size();
  for (const RunRecord& r : rep.records) k_max = std::min(k_max, r.steps.size());
  std::vector<double> lk;
  std::vector<double> le;
  for (std::size_t k = 0; k < k_max; ++k) {
    double m = 0.0;
    for (const RunRecord& r : rep.records) m += distance(r.steps[k].actual, r.steps[k].ideal);
    lk.push_back(std::log(double(k + 1)));
    le.push_back(std::log(m / double(rep.records.size())));
  }
  const double mx = mean_of(lk), my = mean_of(le);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lk.size(); ++i) {
    sxy += (lk[i] - mx) * (le[i] - my);
    sxx += (lk[i] - mx) * (lk[i] - mx);
  }
  const double slope = sxy / sxx;
  return {k_max == 20 && std::abs(slope - 0.5) <= 0.15,
          fmt("k = %zu, log-log slope %.3f (target 0.5 +/-0.15)", k_max, slope)};
}

Outcome scalability() {
  const std::vector<std::size_t> ns{4, 6, 8};
  const auto points = scalability_sweep(bundled("turns.yaml"), ns);
  double lo = 1e9, hi = 0.0;
  std::string detail;
  for (const SweepPoint& p : points) {
    lo = std::min(lo, p.report.final_error.mean);
    hi = std::max(hi, p.report.final_error.mean);
    detail += fmt("N=%zu %.3f m; ", p.n, p.report.final_error.mean);
  }
  return {hi / lo <= 1.3, detail + fmt("max/min %.3f (limit 1.3)", hi / lo)};
}

Outcome planner_safety() {
  const std::vector<Vec2> fallback_layout{{0, kH}, {0.75, 0}, {2.25, 0}, {1.5, kH}};
  const auto p1 = inner_path({fallback_layout[1], fallback_layout[2], fallback_layout[3]}, fallback_layout[0], {1.5, -kH});
  const bool layout_ok = p1.size() == 3 && distance(p1[0], midpoint(fallback_layout[1], fallback_layout[3])) < 1e-12 &&
                      distance(p1[1], midpoint(fallback_layout[1], fallback_layout[2])) < 1e-12 && distance(p1[2], {1.5, -kH}) < 1e-12;

  std::mt19937_64 g(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double min_beacon = 1e9, min_zone = 1e9;
  int planned = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double angle = std::numbers::pi * u(g);
    const Vec2 shift{5 * u(g), 5 * u(g)};
    const std::size_t n = 4 + 2 * static_cast<std::size_t>(trial % 3);
    std::vector<Vec2> pos;
    for (const Pose2D& q : extend_formation(standard_formation(1.5), n, {-10, 0}, 1.5)) {
      pos.push_back(rotate(q.position(), angle) + shift);
    }
    const Vec2 dest = shift + Vec2{20 * u(g), 20 * u(g)};
    std::vector<Obstacle> obs;
    const int n_obs = static_cast<int>(4 * (u(g) + 1));
    for (int k = 0; k < n_obs; ++k) obs.push_back({shift + Vec2{4 * u(g), 4 * u(g)}, 0.1 + 0.2 * (u(g) + 1)});
    PlanStep step;
    try {
      step = plan_n_robot_step(pos, dest, obs);
    } catch (const PlanningError&) {
      continue;
    }
    ++planned;
    Vec2 prev = pos[step.moving_robot];
    for (const Vec2& next : step.inner_path) {
      const int samples = std::max(1, static_cast<int>(std::ceil(distance(prev, next) / 0.01)));
      for (int i = 0; i <= samples; ++i) {
        const Vec2 q = prev + (next - prev) * (double(i) / samples);
        for (std::size_t r = 0; r < pos.size(); ++r) {
          if (r != step.moving_robot) min_beacon = std::min(min_beacon, distance(q, pos[r]));
        }
        for (const Obstacle& o : obs) min_zone = std::min(min_zone, distance(q, o.center) - o.zone_radius());
      }
      prev = next;
    }
  }
  return {layout_ok && planned > 0 && min_beacon >= 0.25 * 1.5 && min_zone > 0.0,
          fmt("fallback-layout path %s; %d/1000 planned, min beacon clearance %.3f m (need 0.375), min zone margin %.3f m",
              layout_ok ? "matches" : "differs", planned, min_beacon, min_zone)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

bool same_tree(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), a));
  }
  std::size_t count_b = 0;
  for (const auto& e : fs::recursive_directory_iterator(b)) count_b += e.is_regular_file() ? 1 : 0;
  if (files.empty() || files.size() != count_b) return false;
  return std::all_of(files.begin(), files.end(), [&](const fs::path& f) { return slurp(a / f) == slurp(b / f); });
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "trisim_acceptance";
  fs::remove_all(root);
  const std::string turns = (fs::path(TRISIM_SOURCE_DIR) / "scenarios" / "turns.yaml").string();
  const std::string patrol = (fs::path(TRISIM_SOURCE_DIR) / "scenarios" / "patrol.yaml").string();
  const std::vector<std::string> invocations{
      "run " + turns + " --mode macro --runs 100 --seed 42",
      "run " + turns + " --mode dead_reckoning --runs 20 --seed 7",
      "run " + patrol + " --mode micro --runs 3 --seed 42",
      "compare " + turns + " " + patrol + " --runs 20 --seed 42",
      "sweep-n " + turns + " --n 4,6 --runs 20",
  };
  int identical = 0;
  for (std::size_t i = 0; i < invocations.size(); ++i) {
    std::vector<fs::path> dirs;
    for (const char* threads : {"1", "1", "4"}) {
      const fs::path dir = root / std::to_string(i) / (std::to_string(dirs.size()) + "_t" + threads);
      fs::create_directories(dir);
      const bool takes_dir = invocations[i].rfind("run ", 0) == 0 || invocations[i].rfind("sweep", 0) == 0 ||
                             invocations[i].rfind("compare", 0) == 0;
      const std::string cmd = std::string("TRISIM_THREADS=") + threads + " " + TRISIM_CLI + " " + invocations[i] +
                              (takes_dir ? " --out-dir " + (dir / "out").string() : "") + " > " +
                              (dir / "stdout.txt").string() + " 2>&1";
      if (std::system(cmd.c_str()) != 0) return {false, "command failed: " + cmd};
      dirs.push_back(dir);
    }
    if (same_tree(dirs[0], dirs[1]) && same_tree(dirs[0], dirs[2])) ++identical;
  }
  fs::remove_all(root);
  return {identical == int(invocations.size()),
          fmt("%d/%zu invocations byte-identical across repeats and TRISIM_THREADS=1/4", identical,
              invocations.size())};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "WSS model", 1, wss_model},
      {2, "Gauss-Markov heading", 10, gauss_markov},
      {3, "vertex-error sampler", 1, vertex_sampler},
      {4, "closed-loop vertex controller", 60, closed_loop},
      {5, "omega invariance of the proposed method", 30, omega_invariance},
      {6, "dead-reckoning time dependence", 120, dr_time_dependence},
      {7, "method ordering", 180, method_ordering},
      {8, "error-accumulation law", 60, accumulation_law},
      {9, "scalability", 120, scalability},
      {10, "planner safety", 30, planner_safety},
      {11, "determinism", 60, determinism},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && secs < c.budget_s;
    failed += pass ? 0 : 1;
    std::printf("%s %2d %s: %s [%.2f s, budget %.0f s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                c.budget_s);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed;
}
