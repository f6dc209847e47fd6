#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "trisim/sim.hpp"

namespace trisim {

/// 9 significant digits, as used in every CSV and JSON output.
std::string format_float(double value);

inline constexpr const char* kStepCsvHeader = "run,step,mover_id,ideal_x,ideal_y,actual_x,actual_y,e_lat,e_lon";
inline constexpr const char* kTickCsvHeader = "run,t,true_x,true_y,est_x,est_y,err";
inline constexpr const char* kTrajectoryCsvHeader = "run,maneuver,t,x,y,heading,phase";
inline constexpr const char* kCdfCsvHeader = "maneuver,e_lat,e_lon,magnitude,cdf";

/// One row per maneuver (macro, micro) or recorded tick (dead reckoning).
std::string runs_csv(const AggregateReport& report);
/// Closed-loop micro-mode trajectories; header only for other modes.
std::string trajectory_csv(const AggregateReport& report);
std::string aggregate_json(const Scenario& scenario, const AggregateReport& report);
std::string summary_text(const Scenario& scenario, const AggregateReport& report);

/// Writes summary.txt, runs.csv, aggregate.json and, in micro mode,
/// trajectory.csv into `dir` (created when missing).
void write_bundle(const std::filesystem::path& dir, const Scenario& scenario, const AggregateReport& report);

/// Rows: trajectory; columns: omega x method, plus the dead-reckoning error
/// ratio between the first and last omega.
std::string compare_table(std::span<const CompareCell> cells);
std::string compare_json(std::span<const CompareCell> cells);
std::string sweep_table(std::span<const SweepPoint> points);
std::string sweep_json(std::span<const SweepPoint> points);
/// Samples with the empirical CDF of their magnitude (rank / count).
std::string cdf_csv(std::span<const ManeuverSample> samples);

}  // namespace trisim
