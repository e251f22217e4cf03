#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vtolreg/scenario.hpp"

namespace vtolreg {

struct TraceRecord {
  double t = 0.0;
  double tau = 0.0;
  ReducedStated x;
  ReferencePoint reference;
  VirtualInputd mu;
  ControlInputd u;  // after saturation
  SaturationFlags saturation;
  Vector3d disturbance = Vector3d::Zero();
  double dist_sq = 0.0;
  Vector3d eta = Vector3d::Zero();
  bool ambiguous = false;
};

struct TraceLog {
  std::vector<TraceRecord> records;
};

/// Exact column order of the trace CSV.
const std::vector<std::string>& trace_columns();

void write_trace_csv(const TraceLog& trace, std::ostream& out);
void write_trace_csv(const TraceLog& trace, const std::filesystem::path& path);
/// Throws ConfigError on a schema mismatch.
TraceLog read_trace_csv(const std::filesystem::path& path);

struct Metrics {
  std::size_t samples = 0;
  double peak_speed = 0.0;
  double mean_speed = 0.0;
  double mean_reference_speed = 0.0;
  double speed_deficit = 0.0;  // 1 - mean_speed / mean_reference_speed
  double peak_thrust = 0.0;
  double thrust_saturation_duty = 0.0;
  double max_path_deviation = 0.0;
  double settling_time = 0.0;  // NaN when the 1 cm tube is never entered for good
  double peak_virtual_input = 0.0;
  double final_tau = 0.0;
  bool diverged = false;
  std::string termination = "duration";
};

/// Computed from the trace and the path geometry only.
Metrics compute_metrics(const TraceLog& trace, const Maneuver& maneuver, bool diverged);

nlohmann::json metrics_to_json(const Metrics& m);

struct RunResult {
  TraceLog trace;
  Metrics metrics;
  std::string error;  // controller/projection failure that ended the run
};

/// Hold clamp: position reset to the hold point and velocity zeroed while
/// `hold` is active at time t; identity otherwise.
ReducedStated apply_hold(const ReducedStated& x, const std::optional<HoldSpec>& hold, const Vector3d& hold_point,
                         double t);

/// Regularised Coulomb drag opposing (horizontal) motion.
DisturbanceInputd drag_force(const Vector3d& velocity, const DragSpec& drag, const VehicleParamsd& params);

inline constexpr double kDivergenceDeviation = 5.0;  // m
inline constexpr double kSettlingTube = 0.01;        // m

/// Deterministic rollout: plant at 1/plant_step, controller every
/// control_divider plant steps.
RunResult run_scenario(const Scenario& s);

struct Comparison {
  RunResult tracking;
  RunResult regulation;
  nlohmann::json summary;
};

/// Both scenarios must be identical except for the controller mode.
Comparison compare(const Scenario& tracking, const Scenario& regulation);

/// Writes tracking_trace.csv, regulation_trace.csv and summary.json.
void write_comparison(const Comparison& c, const std::filesystem::path& out_dir);

/// Tidy per-panel CSVs for the figure scripts.
std::vector<std::filesystem::path> write_plot_data(const TraceLog& trace, const std::filesystem::path& out_dir);

}  // namespace vtolreg
