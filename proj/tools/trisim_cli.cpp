// trisim: command-line front end for the formation simulator.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "trisim/report.hpp"
#include "trisim/scenario_file.hpp"
#include "trisim/sim.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitScenario = 2;
constexpr int kExitSimulation = 3;

struct Overrides {
  std::optional<std::string> mode;
  std::optional<std::size_t> runs;
  std::optional<std::uint64_t> seed;
};

trisim::Scenario load(const std::string& path, const Overrides& o) {
  trisim::Scenario s = trisim::load_scenario(path);
  if (o.mode) {
    const auto m = trisim::parse_mode(*o.mode);
    if (!m) throw trisim::ScenarioError("--mode: expected micro, macro or dead_reckoning");
    s.mode = *m;
  }
  if (o.runs) s.runs = *o.runs;
  if (o.seed) s.master_seed = *o.seed;
  try {
    s.validate();
  } catch (const trisim::ScenarioError& e) {
    throw trisim::ScenarioError(std::string("after command-line overrides: ") + e.what());
  }
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int cmd_run(const std::string& path, const Overrides& o, const std::string& out_dir) {
  const trisim::Scenario s = load(path, o);
  const trisim::AggregateReport rep = trisim::monte_carlo(s);
  trisim::write_bundle(out_dir, s, rep);
  std::cout << trisim::summary_text(s, rep);
  return kExitOk;
}

int cmd_compare(const std::vector<std::string>& paths, const std::vector<double>& omegas, const Overrides& o,
                const std::string& out_dir, bool check) {
  std::vector<trisim::Scenario> scenarios;
  for (const std::string& p : paths) scenarios.push_back(load(p, o));
  const auto cells = trisim::compare_methods(scenarios, omegas);
  const std::string table = trisim::compare_table(cells);
  std::cout << table;
  if (!out_dir.empty()) {
    write_text(std::filesystem::path(out_dir) / "compare.txt", table);
    write_text(std::filesystem::path(out_dir) / "compare.json", trisim::compare_json(cells));
  }
  if (!check) return kExitOk;
  bool ok = true;
  for (const auto& c : cells) {
    if (!(c.proposed.final_error.mean < c.dead_reckoning.final_error.mean)) {
      std::cerr << "check failed: proposed >= dead reckoning for " << c.trajectory << " at omega "
                << trisim::format_float(c.omega_wheel) << "\n";
      ok = false;
    }
  }
  if (omegas.size() > 1) {
    for (const auto& s : scenarios) {
      const trisim::CompareCell* first = nullptr;
      const trisim::CompareCell* last = nullptr;
      for (const auto& c : cells) {
        if (c.trajectory != s.name) continue;
        if (c.omega_wheel == omegas.front()) first = &c;
        if (c.omega_wheel == omegas.back()) last = &c;
      }
      const double ratio = last->dead_reckoning.final_error.mean / first->dead_reckoning.final_error.mean;
      const double expected = omegas.front() / omegas.back();
      if (ratio < 0.8 * expected || ratio > 1.2 * expected) {
        std::cerr << "check failed: dead-reckoning error ratio " << trisim::format_float(ratio) << " for " << s.name
                  << " is outside [" << trisim::format_float(0.8 * expected) << ", "
                  << trisim::format_float(1.2 * expected) << "]\n";
        ok = false;
      }
    }
  }
  return ok ? kExitOk : kExitCheckFailed;
}

int cmd_sweep(const std::string& path, const std::vector<std::size_t>& ns, const Overrides& o,
              const std::string& out_dir) {
  const trisim::Scenario s = load(path, o);
  const auto points = trisim::scalability_sweep(s, ns);
  const std::string table = trisim::sweep_table(points);
  std::cout << table;
  if (!out_dir.empty()) {
    write_text(std::filesystem::path(out_dir) / "sweep.txt", table);
    write_text(std::filesystem::path(out_dir) / "sweep.json", trisim::sweep_json(points));
  }
  return kExitOk;
}

int cmd_cdf(const std::string& path, std::size_t maneuvers, const Overrides& o, const std::string& out) {
  const trisim::Scenario s = load(path, o);
  const std::string csv = trisim::cdf_csv(trisim::micro_error_samples(s, maneuvers));
  if (out.empty()) {
    std::cout << csv;
  } else {
    write_text(out, csv);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equilateral-formation cooperative localization simulator"};
  app.require_subcommand(1);

  Overrides o;
  auto add_overrides = [&](CLI::App* sub, bool with_mode) {
    if (with_mode) {
      sub->add_option_function<std::string>("--mode", [&](const std::string& v) { o.mode = v; },
                                            "micro, macro or dead_reckoning");
    }
    sub->add_option_function<std::size_t>("--runs", [&](std::size_t v) { o.runs = v; }, "Monte Carlo runs");
    sub->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { o.seed = v; }, "master seed");
  };

  std::string scenario;
  std::string out_dir = "out";
  auto* run = app.add_subcommand("run", "Monte Carlo runs of one scenario; writes an output bundle");
  run->add_option("scenario", scenario, "scenario file")->required();
  run->add_option("--out-dir", out_dir, "bundle directory");
  add_overrides(run, true);

  std::vector<std::string> compare_paths;
  std::vector<double> omegas{5.8, 2.9};
  std::string compare_out;
  bool check = false;
  auto* compare = app.add_subcommand("compare", "proposed vs dead reckoning grid over wheel speeds");
  compare->add_option("scenarios", compare_paths, "scenario files")->required();
  compare->add_option("--omegas", omegas, "wheel speeds, rad/s")->delimiter(',');
  compare->add_option("--out-dir", compare_out, "write compare.txt and compare.json here");
  compare->add_flag("--check", check, "exit 1 unless every ordering and ratio check holds");
  add_overrides(compare, false);

  std::vector<std::size_t> ns{4, 6, 8};
  std::string sweep_out;
  auto* sweep = app.add_subcommand("sweep-n", "macro-mode error for several formation sizes");
  sweep->add_option("scenario", scenario, "scenario file")->required();
  sweep->add_option("--n", ns, "formation sizes")->delimiter(',');
  sweep->add_option("--out-dir", sweep_out, "write sweep.txt and sweep.json here");
  add_overrides(sweep, false);

  std::size_t maneuvers = 60;
  std::string cdf_out;
  auto* cdf = app.add_subcommand("cdf", "per-maneuver micro-mode errors for CDF plots");
  cdf->add_option("scenario", scenario, "scenario file")->required();
  cdf->add_option("--maneuvers", maneuvers, "number of maneuvers");
  cdf->add_option("--out", cdf_out, "CSV path (default stdout)");
  add_overrides(cdf, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitScenario;
  }

  try {
    if (*run) return cmd_run(scenario, o, out_dir);
    if (*compare) return cmd_compare(compare_paths, omegas, o, compare_out, check);
    if (*sweep) return cmd_sweep(scenario, ns, o, sweep_out);
    if (*cdf) return cmd_cdf(scenario, maneuvers, o, cdf_out);
  } catch (const trisim::ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return kExitScenario;
  } catch (const std::exception& e) {
    std::cerr << "simulation error: " << e.what() << "\n";
    return kExitSimulation;
  }
  return kExitOk;
}
