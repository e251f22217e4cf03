#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vtolreg/types.hpp"
#include "vtolreg/vehicle_dynamics.hpp"

namespace vtolreg {

struct ReferencePoint {
  Vector3d position = Vector3d::Zero();
  Vector3d velocity = Vector3d::Zero();
  Vector3d acceleration = Vector3d::Zero();
  double yaw = 0.0;
  double yaw_rate = 0.0;

  /// z_d = [p_d; v_d; psi_d]
  StateVectord state() const {
    StateVectord z;
    z << position, velocity, yaw;
    return z;
  }
  /// dz_d/dtau
  StateVectord state_rate() const {
    StateVectord dz;
    dz << velocity, acceleration, yaw_rate;
    return dz;
  }
};

struct ManeuverDomain {
  double tau_min = 0.0;
  double tau_max = 0.0;
  bool closed = false;  // periodic with period tau_max - tau_min
};

/// Immutable time-parametrised reference curve with a precomputed table of
/// z_d on a uniform grid. Closed maneuvers accept any tau (wrapped); open
/// ones clamp tau into [tau_min, tau_max].
class Maneuver {
 public:
  using EvalFn = std::function<ReferencePoint(double)>;

  /// `eval` is only called inside the domain. `knots` lists parameter values
  /// where the acceleration may jump.
  Maneuver(std::string kind, ManeuverDomain domain, EvalFn eval, double grid_step,
           std::vector<double> knots = {});

  const std::string& kind() const { return kind_; }
  double tau_min() const { return domain_.tau_min; }
  double tau_max() const { return domain_.tau_max; }
  bool closed() const { return domain_.closed; }
  double period() const { return domain_.tau_max - domain_.tau_min; }
  const std::vector<double>& knots() const { return knots_; }

  ReferencePoint eval(double tau) const;
  StateVectord state(double tau) const { return eval(tau).state(); }

  /// Effective grid step (shrunk so the domain is a whole number of steps).
  double grid_step() const { return grid_step_; }
  /// Number of grid intervals across the domain.
  long intervals() const { return intervals_; }
  /// Parameter of grid node k; k may be any integer for closed maneuvers.
  double node_tau(long k) const { return domain_.tau_min + static_cast<double>(k) * grid_step_; }
  /// Table entry for node k (wrapped when closed, clamped when open).
  const StateVectord& node_state(long k) const;
  const std::vector<StateVectord>& table() const { return table_; }

  /// Euclidean distance from a position to the sampled path polyline.
  double path_distance(const Vector3d& position) const;
  /// Dense polyline used for path distances.
  const std::vector<Vector3d>& path_points() const { return path_; }

 private:
  double wrap(double tau) const;

  std::string kind_;
  ManeuverDomain domain_;
  EvalFn eval_;
  double grid_step_;
  long intervals_;
  std::vector<double> knots_;
  std::vector<StateVectord> table_;
  std::vector<Vector3d> path_;
};

inline constexpr double kDefaultGridStep = 0.01;

/// center + radius*(cos w tau, sin w tau, 0), w = speed/radius.
Maneuver circle(double radius, double speed, const Vector3d& center, double yaw = 0.0,
                double grid_step = kDefaultGridStep);

/// Straight leg, quarter-circle fillet turning left, straight leg, all at
/// constant speed. `heading` is the direction of the first leg in the
/// horizontal plane.
Maneuver turn90(double speed, double leg_length, double fillet_radius, const Vector3d& start,
                double yaw = 0.0, double heading = 0.0, double grid_step = kDefaultGridStep);

Maneuver hover(const Vector3d& position, double duration, double yaw = 0.0,
               double grid_step = kDefaultGridStep);

struct DerivativeReport {
  double max_velocity_deviation = 0.0;
  double max_acceleration_deviation = 0.0;
  double max_deviation = 0.0;
  double tau_at_max = 0.0;
  std::vector<double> offending_taus;
};

/// Central-difference check of v_d against p_d and a_d against v_d at every
/// grid node (nodes within 2*dt of a knot or of an open end are skipped).
/// Throws InconsistentDerivativeError when the deviation exceeds `tol`.
DerivativeReport validate_derivatives(const Maneuver& maneuver, double dt, double tol);

/// Open-loop input that realises the reference exactly: feedback
/// linearisation of mu = (a_d, psi_dot_d).
ControlInputd nominal_input(const ReferencePoint& ref, const VehicleParamsd& params);

}  // namespace vtolreg
