#include "trisim/report.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <string>

#include <fmt/format.h>
#include "json.hpp"

namespace trisim {

namespace {

using nlohmann::ordered_json;

/// Value rounded to 9 significant digits so JSON prints at most that many.
double r9(double v) { return std::stod(format_float(v)); }

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

ordered_json stats_json(const MagnitudeStats& s) { return {{"mean", r9(s.mean)}, {"std", r9(s.std)}}; }

ordered_json report_json(const AggregateReport& r) {
  ordered_json j;
  j["mode"] = to_string(r.mode);
  j["runs"] = r.runs;
  j["mean_final_error_m"] = r9(r.final_error.mean);
  j["std_final_error_m"] = r9(r.final_error.std);
  j["mean_triangle_count"] = r9(r.mean_triangle_count);
  j["mean_travel_time_s"] = r9(r.mean_travel_time);
  if (r.mode != Mode::kDeadReckoning) {
    j["step_abs_e_lat_m"] = stats_json(r.step_lat);
    j["step_abs_e_lon_m"] = stats_json(r.step_lon);
  }
  return j;
}

}  // namespace

std::string format_float(double value) { return fmt::format("{:.9g}", value); }

std::string runs_csv(const AggregateReport& report) {
  std::string out;
  if (report.mode == Mode::kDeadReckoning) {
    out = std::string(kTickCsvHeader) + "\n";
    for (const RunRecord& r : report.records) {
      for (const TickRecord& t : r.ticks) {
        out += fmt::format("{},{},{},{},{},{},{}\n", r.run_index, format_float(t.t), format_float(t.truth.x()),
                           format_float(t.truth.y()), format_float(t.estimate.x()), format_float(t.estimate.y()),
                           format_float(t.error));
      }
    }
    return out;
  }
  out = std::string(kStepCsvHeader) + "\n";
  for (const RunRecord& r : report.records) {
    for (const StepRecord& s : r.steps) {
      out += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.run_index, s.step, s.mover_id, format_float(s.ideal.x),
                         format_float(s.ideal.y), format_float(s.actual.x), format_float(s.actual.y),
                         format_float(s.e_lat), format_float(s.e_lon));
    }
  }
  return out;
}

std::string trajectory_csv(const AggregateReport& report) {
  std::string out = std::string(kTrajectoryCsvHeader) + "\n";
  for (const RunRecord& r : report.records) {
    for (std::size_t m = 0; m < r.maneuvers.size(); ++m) {
      for (const TrajectorySample& s : r.maneuvers[m]) {
        out += fmt::format("{},{},{},{},{},{},{}\n", r.run_index, m, format_float(s.t), format_float(s.pose.x()),
                           format_float(s.pose.y()), format_float(s.pose.heading()), to_string(s.phase));
      }
    }
  }
  return out;
}

std::string aggregate_json(const Scenario& scenario, const AggregateReport& report) {
  ordered_json j;
  j["scenario"] = scenario.name;
  j["master_seed"] = scenario.master_seed;
  j["omega_wheel"] = r9(scenario.omega_wheel);
  const ordered_json body = report_json(report);
  for (const auto& [k, v] : body.items()) j[k] = v;
  std::vector<double> finals;
  for (const RunRecord& r : report.records) finals.push_back(r9(r.final_error));
  j["final_errors_m"] = finals;
  return j.dump(2) + "\n";
}

std::string summary_text(const Scenario& scenario, const AggregateReport& report) {
  std::string out;
  out += fmt::format("scenario      {}\n", scenario.name);
  out += fmt::format("mode          {}\n", to_string(report.mode));
  out += fmt::format("runs          {}\n", report.runs);
  out += fmt::format("master_seed   {}\n", scenario.master_seed);
  out += fmt::format("omega_wheel   {} rad/s\n", format_float(scenario.omega_wheel));
  out += fmt::format("final error   mean {} m, std {} m\n", format_float(report.final_error.mean),
                     format_float(report.final_error.std));
  out += fmt::format("travel time   mean {} s\n", format_float(report.mean_travel_time));
  if (report.mode != Mode::kDeadReckoning) {
    out += fmt::format("triangles     mean {}\n", format_float(report.mean_triangle_count));
    out += fmt::format("|e_lat|       mean {} m, std {} m\n", format_float(report.step_lat.mean),
                       format_float(report.step_lat.std));
    out += fmt::format("|e_lon|       mean {} m, std {} m\n", format_float(report.step_lon.mean),
                       format_float(report.step_lon.std));
  }
  return out;
}

void write_bundle(const std::filesystem::path& dir, const Scenario& scenario, const AggregateReport& report) {
  std::filesystem::create_directories(dir);
  write_file(dir / "summary.txt", summary_text(scenario, report));
  write_file(dir / "runs.csv", runs_csv(report));
  write_file(dir / "aggregate.json", aggregate_json(scenario, report));
  if (report.mode == Mode::kMicro) write_file(dir / "trajectory.csv", trajectory_csv(report));
}

std::string compare_table(std::span<const CompareCell> cells) {
  std::vector<std::string> trajectories;
  std::vector<double> omegas;
  for (const CompareCell& c : cells) {
    if (std::find(trajectories.begin(), trajectories.end(), c.trajectory) == trajectories.end()) {
      trajectories.push_back(c.trajectory);
    }
    if (std::find(omegas.begin(), omegas.end(), c.omega_wheel) == omegas.end()) omegas.push_back(c.omega_wheel);
  }
  auto find = [&](const std::string& t, double w) -> const CompareCell* {
    for (const CompareCell& c : cells) {
      if (c.trajectory == t && c.omega_wheel == w) return &c;
    }
    return nullptr;
  };
  std::string out = "Localization error at the destination (m), mean over runs\n";
  out += fmt::format("{:<12}", "trajectory");
  for (double w : omegas) {
    out += fmt::format(" {:>16} {:>16}", fmt::format("proposed@{}", format_float(w)), fmt::format("DR@{}", format_float(w)));
  }
  if (omegas.size() > 1) out += fmt::format(" {:>10}", "DR ratio");
  out += "\n";
  for (const std::string& t : trajectories) {
    out += fmt::format("{:<12}", t);
    for (double w : omegas) {
      const CompareCell* c = find(t, w);
      out += fmt::format(" {:>16} {:>16}", format_float(c->proposed.final_error.mean),
                         format_float(c->dead_reckoning.final_error.mean));
    }
    if (omegas.size() > 1) {
      const double ratio = find(t, omegas.back())->dead_reckoning.final_error.mean /
                           find(t, omegas.front())->dead_reckoning.final_error.mean;
      out += fmt::format(" {:>10}", format_float(ratio));
    }
    out += "\n";
  }
  return out;
}

std::string compare_json(std::span<const CompareCell> cells) {
  ordered_json j = ordered_json::array();
  for (const CompareCell& c : cells) {
    j.push_back({{"trajectory", c.trajectory},
                 {"omega_wheel", r9(c.omega_wheel)},
                 {"proposed", report_json(c.proposed)},
                 {"dead_reckoning", report_json(c.dead_reckoning)}});
  }
  return j.dump(2) + "\n";
}

std::string sweep_table(std::span<const SweepPoint> points) {
  std::string out = fmt::format("{:>4} {:>16} {:>16} {:>12}\n", "n", "mean_error_m", "std_error_m", "triangles");
  double lo = 0.0;
  double hi = 0.0;
  for (const SweepPoint& p : points) {
    const double m = p.report.final_error.mean;
    lo = (&p == points.data()) ? m : std::min(lo, m);
    hi = (&p == points.data()) ? m : std::max(hi, m);
    out += fmt::format("{:>4} {:>16} {:>16} {:>12}\n", p.n, format_float(m), format_float(p.report.final_error.std),
                       format_float(p.report.mean_triangle_count));
  }
  if (!points.empty() && lo > 0.0) out += fmt::format("max/min mean error {}\n", format_float(hi / lo));
  return out;
}

std::string sweep_json(std::span<const SweepPoint> points) {
  ordered_json j = ordered_json::array();
  for (const SweepPoint& p : points) {
    ordered_json e = report_json(p.report);
    e["n"] = p.n;
    j.push_back(e);
  }
  return j.dump(2) + "\n";
}

std::string cdf_csv(std::span<const ManeuverSample> samples) {
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return samples[a].magnitude < samples[b].magnitude; });
  std::vector<double> cdf(samples.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    cdf[order[rank]] = double(rank + 1) / double(samples.size());
  }
  std::string out = std::string(kCdfCsvHeader) + "\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const ManeuverSample& s = samples[i];
    out += fmt::format("{},{},{},{},{}\n", s.index, format_float(s.e_lat), format_float(s.e_lon),
                       format_float(s.magnitude), format_float(cdf[i]));
  }
  return out;
}

}  // namespace trisim
