#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "vtolreg/maneuver.hpp"
#include "vtolreg/maneuver_regulation.hpp"
#include "vtolreg/tracking_controller.hpp"
#include "vtolreg/vehicle_dynamics.hpp"

namespace vtolreg {

inline constexpr int kSchemaVersion = 1;

enum class ControllerMode { Tracking, Regulation };

std::string to_string(ControllerMode mode);

struct CircleSpec {
  double radius = 0.25;
  double speed = 0.1;
  Vector3d center{0.0, 0.0, -1.0};
};

struct Turn90Spec {
  double speed = 0.2;
  double leg_length = 0.5;
  double fillet_radius = 0.2;
  Vector3d start{0.5, 0.0, -1.0};
  double heading = 0.0;
};

struct HoverSpec {
  Vector3d position{0.0, 0.0, -1.0};
  double duration = 10.0;
};

struct ManeuverSpec {
  std::variant<CircleSpec, Turn90Spec, HoverSpec> shape;
  double yaw = 0.0;
  double grid_step = kDefaultGridStep;

  Maneuver build() const;
};

enum class MetricChoice { Lyapunov, PositionWeighted, Explicit };

struct ProjectionSpec {
  MetricChoice metric = MetricChoice::Lyapunov;
  double velocity_weight = 1e-3;  // PositionWeighted only
  double yaw_weight = 1e-3;       // PositionWeighted only
  StateMatrixd explicit_P = StateMatrixd::Identity();
  double window_halfwidth = 1.0;
  double refine_tol = 1e-5;
  bool forward_only = false;
  std::optional<double> tube_threshold;
};

struct HoldSpec {
  std::optional<Vector3d> position;  // defaults to p_d(tau_min)
  double start = 0.0;
  double release = 5.0;
  bool freeze_integrator = true;

  bool active_at(double t) const { return t >= start && t < release; }
};

struct DragSpec {
  double magnitude = 0.0;  // N
  double epsilon = 0.01;   // m/s
  bool horizontal_only = true;
};

struct InitialState {
  /// Empty: start on z_d(tau_min) (plus offsets).
  std::optional<ReducedStated> state;
  double radial_offset = 0.0;  // m, outward from the path's curvature centre (circle only)
  Vector3d position_offset = Vector3d::Zero();
};

struct Scenario {
  std::string name = "scenario";
  ControllerMode mode = ControllerMode::Regulation;
  ManeuverSpec maneuver;
  Gainsd gains;
  ProjectionSpec projection;
  VehicleParamsd vehicle;
  double duration = 20.0;
  double plant_step = 0.002;
  int control_divider = 5;
  std::optional<HoldSpec> hold;
  std::optional<DragSpec> drag;
  InitialState initial;
  bool end_on_completion = false;
  std::uint64_t seed = 0;
  /// Where the gains were loaded from when given by reference.
  std::string gains_source;

  double control_period() const { return plant_step * control_divider; }
  void validate() const;
  ProjectionConfig projection_config() const;
  ReducedStated initial_state(const Maneuver& maneuver) const;
};

/// Throws ConfigError on malformed input. Relative "gains" file references
/// are resolved against `base_dir`.
Scenario scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json scenario_to_json(const Scenario& s);

Scenario load_scenario(const std::filesystem::path& path);

Gainsd gains_from_json(const nlohmann::json& j);
nlohmann::json gains_to_json(const Gainsd& g);
VehicleParamsd vehicle_from_json(const nlohmann::json& j);

/// Drag magnitude equal to `fraction` of the lateral authority m*sqrt((f_max/m)^2 - g^2).
double drag_for_authority_fraction(double fraction, const VehicleParamsd& params);

}  // namespace vtolreg
