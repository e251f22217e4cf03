#pragma once

// Maneuver regulation: the tracking law evaluated at the projected time
// pi(z) = argmin_tau ||z - z_d(tau)||_P^2 instead of at wall-clock time.

#include <functional>
#include <optional>

#include "vtolreg/lyapunov.hpp"
#include "vtolreg/maneuver.hpp"
#include "vtolreg/tracking_controller.hpp"
#include "vtolreg/types.hpp"
#include "vtolreg/vehicle_dynamics.hpp"

namespace vtolreg {

struct ProjectionConfig {
  StateMatrixd metric_P = StateMatrixd::Identity();
  double window_halfwidth = 1.0;  // s
  double refine_tol = 1e-5;       // s
  double grid_step = kDefaultGridStep;
  bool forward_only = false;
  /// Optional bound on dist_sq outside of which the projection is flagged.
  std::optional<double> tube_threshold;

  /// Throws ConfigError on a non-symmetric / non-positive-definite metric or
  /// inconsistent tolerances.
  void validate() const;
};

struct ProjectionState {
  double tau_prev = 0.0;  // unwrapped for closed maneuvers
  bool initialized = false;
};

struct ProjectionResult {
  double tau_star = 0.0;
  double dist_sq = 0.0;
  bool ambiguous = false;     // competing local minimum within 1 % of the best
  bool outside_tube = false;  // dist_sq above the configured tube threshold
  ProjectionState state;
};

/// P-weighted squared distance between z and z_d.
inline double weighted_distance_sq(const StateVectord& z, const StateVectord& z_d, const StateMatrixd& P) {
  const StateVectord e = z - z_d;
  return e.dot(P * e);
}

/// Golden-section minimisation of a unimodal f on [lo, hi]; returns the
/// abscissa once the bracket is narrower than tol.
double golden_section_minimize(const std::function<double(double)>& f, double lo, double hi, double tol);

/// Coarse search over the table nodes in the window (the whole curve on the
/// first call), then golden-section refinement around the best node.
ProjectionResult project(const StateVectord& z, const Maneuver& maneuver, const ProjectionConfig& cfg,
                         const ProjectionState& state);

/// Exhaustive scan at step dtau over the full domain (one period when
/// closed). Exact ties go to the smaller tau.
double project_brute_force(const StateVectord& z, const Maneuver& maneuver, const StateMatrixd& P, double dtau);

struct RegulationDiagnostics {
  ProjectionResult projection;
  ReferencePoint reference;
  StateVectord error = StateVectord::Zero();  // z - z_d(tau_star)
  VirtualInputd virtual_input;
};

struct RegulationOutput {
  ControlInputd input;
  RegulationDiagnostics diagnostics;
};

/// Same gains as the tracking law; only the reference time changes.
RegulationOutput regulation_control(const ReducedStated& x, const Maneuver& maneuver, const Gainsd& gains,
                                    const IntegratorStated& eta, const ProjectionConfig& cfg,
                                    const ProjectionState& state, const VehicleParamsd& params);

/// Lyapunov metric of the 7-state closed loop (Q = I) as a projection metric.
StateMatrixd default_metric(const Gainsd& gains);

/// diag(1,1,1, w_v,w_v,w_v, w_psi): position-weighted override.
StateMatrixd position_weighted_metric(double velocity_weight, double yaw_weight);

}  // namespace vtolreg
