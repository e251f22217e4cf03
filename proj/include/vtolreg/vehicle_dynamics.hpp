#pragma once

// Reduced vectored-thrust model: position, velocity and yaw driven by
// thrust, roll/pitch commands and a yaw-rate command. The third axis points
// down, so gravity enters with a plus sign and hover altitude is negative.

#include <algorithm>
#include <cmath>
#include <string>

#include "vtolreg/errors.hpp"
#include "vtolreg/types.hpp"

namespace vtolreg {

template <typename Scalar>
struct ReducedState {
  Vector3<Scalar> p = Vector3<Scalar>::Zero();
  Vector3<Scalar> v = Vector3<Scalar>::Zero();
  Scalar psi{0};  // unwrapped

  StateVector<Scalar> as_vector() const {
    StateVector<Scalar> z;
    z << p, v, psi;
    return z;
  }

  static ReducedState from_vector(const StateVector<Scalar>& z) {
    ReducedState x;
    x.p = z.template segment<3>(0);
    x.v = z.template segment<3>(3);
    x.psi = z(6);
    return x;
  }

  bool all_finite() const { return p.allFinite() && v.allFinite() && std::isfinite(psi); }
};

template <typename Scalar>
struct ControlInput {
  Scalar thrust{0};    // N
  Scalar roll{0};      // rad
  Scalar pitch{0};     // rad
  Scalar yaw_rate{0};  // rad/s
};

template <typename Scalar>
struct VehicleParams {
  Scalar mass{0.03};
  Scalar gravity{9.81};
  Scalar thrust_max{0.31};
  Scalar angle_max{0.6};
  Scalar attitude_lag_tau{0};  // 0 = commands realised instantly
  Scalar singularity_eps{1e-6};

  void validate() const {
    if (!(mass > 0)) throw ConfigError("vehicle: mass must be positive");
    if (!(gravity > 0)) throw ConfigError("vehicle: gravity must be positive");
    if (!(thrust_max > 0)) throw ConfigError("vehicle: f_max must be positive");
    if (!(angle_max > 0) || !(angle_max < Scalar(M_PI / 2)))
      throw ConfigError("vehicle: angle_max must lie in (0, pi/2)");
    if (!(attitude_lag_tau >= 0)) throw ConfigError("vehicle: attitude_lag_tau must be >= 0");
    if (!(singularity_eps > 0)) throw ConfigError("vehicle: singularity_eps must be positive");
  }

  Scalar hover_thrust() const { return mass * gravity; }
};

template <typename Scalar>
struct DisturbanceInput {
  Vector3<Scalar> force = Vector3<Scalar>::Zero();  // specific force, m/s^2
  bool hold_active = false;
  Vector3<Scalar> hold_position = Vector3<Scalar>::Zero();
};

struct SaturationFlags {
  bool thrust = false;
  bool roll = false;
  bool pitch = false;

  bool any() const { return thrust || roll || pitch; }
  friend bool operator==(const SaturationFlags&, const SaturationFlags&) = default;
};

/// Unit thrust direction expressed in the world frame, times -1: the
/// acceleration produced by thrust f is -(f/m) * thrust_axis(...).
template <typename Scalar>
Vector3<Scalar> thrust_axis(Scalar roll, Scalar pitch, Scalar yaw) {
  using std::cos;
  using std::sin;
  const Scalar sphi = sin(roll), cphi = cos(roll);
  const Scalar sth = sin(pitch), cth = cos(pitch);
  const Scalar spsi = sin(yaw), cpsi = cos(yaw);
  return Vector3<Scalar>(sphi * spsi + cpsi * sth * cphi,
                         -sphi * cpsi + spsi * sth * cphi,
                         cphi * cth);
}

/// Time derivative of z = [p; v; psi].
template <typename Scalar>
StateVector<Scalar> reduced_dynamics(const ReducedState<Scalar>& x, const ControlInput<Scalar>& u,
                                     const DisturbanceInput<Scalar>& d,
                                     const VehicleParams<Scalar>& params) {
  using std::cos;
  const Scalar tilt = cos(u.roll) * cos(u.pitch);
  if (!(tilt > params.singularity_eps)) {
    throw SingularAttitudeError("reduced_dynamics: cos(roll)*cos(pitch) = " + std::to_string(double(tilt)) +
                                " is at or below the singularity guard");
  }
  const Vector3<Scalar> accel = Vector3<Scalar>(0, 0, params.gravity) -
                                (u.thrust / params.mass) * thrust_axis(u.roll, u.pitch, x.psi) + d.force;
  StateVector<Scalar> dz;
  dz << x.v, accel, u.yaw_rate;
  return dz;
}

template <typename Scalar>
struct SaturatedInput {
  ControlInput<Scalar> input;
  SaturationFlags flags;
};

template <typename Scalar>
SaturatedInput<Scalar> saturate(const ControlInput<Scalar>& u, const VehicleParams<Scalar>& params) {
  SaturatedInput<Scalar> out{u, {}};
  auto clamp = [](Scalar value, Scalar lo, Scalar hi, bool& flag) {
    if (value < lo) {
      flag = true;
      return lo;
    }
    if (value > hi) {
      flag = true;
      return hi;
    }
    return value;
  };
  out.input.thrust = clamp(u.thrust, Scalar(0), params.thrust_max, out.flags.thrust);
  out.input.roll = clamp(u.roll, -params.angle_max, params.angle_max, out.flags.roll);
  out.input.pitch = clamp(u.pitch, -params.angle_max, params.angle_max, out.flags.pitch);
  return out;
}

/// Position reset and velocity zeroed; yaw untouched.
template <typename Scalar>
ReducedState<Scalar> clamp_to_hold(const ReducedState<Scalar>& x, const Vector3<Scalar>& hold_position) {
  ReducedState<Scalar> held = x;
  held.p = hold_position;
  held.v.setZero();
  return held;
}

/// Classical RK4 advance of reduced_dynamics with u and d held over the step.
template <typename Scalar>
ReducedState<Scalar> step(const ReducedState<Scalar>& x, const ControlInput<Scalar>& u,
                          const DisturbanceInput<Scalar>& d, Scalar h, const VehicleParams<Scalar>& params) {
  if (!(h > 0)) throw ConfigError("step: h must be positive");
  using State = ReducedState<Scalar>;
  const StateVector<Scalar> z = x.as_vector();
  const StateVector<Scalar> k1 = reduced_dynamics(x, u, d, params);
  const StateVector<Scalar> k2 = reduced_dynamics(State::from_vector(z + (h / 2) * k1), u, d, params);
  const StateVector<Scalar> k3 = reduced_dynamics(State::from_vector(z + (h / 2) * k2), u, d, params);
  const StateVector<Scalar> k4 = reduced_dynamics(State::from_vector(z + h * k3), u, d, params);
  State next = State::from_vector(z + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4));
  if (d.hold_active) next = clamp_to_hold(next, d.hold_position);
  return next;
}

/// Reduced state plus the realised roll/pitch of a first-order inner loop.
template <typename Scalar>
struct LaggedState {
  ReducedState<Scalar> body;
  Scalar roll{0};
  Scalar pitch{0};
};

/// RK4 advance of the reduced model with roll/pitch following the commands
/// through d(angle)/dt = (command - angle) / tau. Falls back to the ideal
/// inner loop when attitude_lag_tau is zero.
template <typename Scalar>
LaggedState<Scalar> step_lagged(const LaggedState<Scalar>& x, const ControlInput<Scalar>& command,
                                const DisturbanceInput<Scalar>& d, Scalar h,
                                const VehicleParams<Scalar>& params) {
  if (!(params.attitude_lag_tau > 0)) {
    return {step(x.body, command, d, h, params), command.roll, command.pitch};
  }
  if (!(h > 0)) throw ConfigError("step_lagged: h must be positive");
  using Vec9 = Eigen::Matrix<Scalar, 9, 1>;
  const Scalar tau = params.attitude_lag_tau;
  auto derivative = [&](const Vec9& s) {
    ControlInput<Scalar> realised = command;
    realised.roll = s(7);
    realised.pitch = s(8);
    Vec9 ds;
    ds << reduced_dynamics(ReducedState<Scalar>::from_vector(s.template head<7>()), realised, d, params),
        (command.roll - s(7)) / tau, (command.pitch - s(8)) / tau;
    return ds;
  };
  Vec9 s;
  s << x.body.as_vector(), x.roll, x.pitch;
  const Vec9 k1 = derivative(s);
  const Vec9 k2 = derivative(s + (h / 2) * k1);
  const Vec9 k3 = derivative(s + (h / 2) * k2);
  const Vec9 k4 = derivative(s + h * k3);
  const Vec9 next = s + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
  LaggedState<Scalar> out{ReducedState<Scalar>::from_vector(next.template head<7>()), next(7), next(8)};
  if (d.hold_active) out.body = clamp_to_hold(out.body, d.hold_position);
  return out;
}

/// Largest horizontal specific force available while holding altitude at
/// full thrust: sqrt((f_max/m)^2 - g^2), times m. Zero when f_max <= m g.
template <typename Scalar>
Scalar lateral_authority(const VehicleParams<Scalar>& params) {
  const Scalar a_max = params.thrust_max / params.mass;
  const Scalar excess = a_max * a_max - params.gravity * params.gravity;
  return excess > 0 ? params.mass * std::sqrt(excess) : Scalar(0);
}

using ReducedStated = ReducedState<double>;
using ControlInputd = ControlInput<double>;
using VehicleParamsd = VehicleParams<double>;
using DisturbanceInputd = DisturbanceInput<double>;

}  // namespace vtolreg
