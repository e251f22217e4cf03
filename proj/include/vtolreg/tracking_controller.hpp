#pragma once

// Feedback-linearising outer loop. The virtual input mu = [mu_p; mu_psi]
// turns the reduced model into p'' = mu_p, psi' = mu_psi; the inversion
// below maps mu back to thrust and roll/pitch commands.

#include <algorithm>
#include <cmath>
#include <string>

#include "vtolreg/errors.hpp"
#include "vtolreg/maneuver.hpp"
#include "vtolreg/types.hpp"
#include "vtolreg/vehicle_dynamics.hpp"

namespace vtolreg {

template <typename Scalar>
struct Gains {
  Scalar k_p{16};
  Scalar k_d{8};
  Scalar k_psi{2};
  Scalar k_i{0};            // 0 disables integral action
  Scalar eta_limit{0.5};    // m*s, per axis
  Scalar mu3_margin{1.0};   // mu_3 is kept below g - mu3_margin

  void validate() const {
    if (!(k_p > 0) || !(k_d > 0) || !(k_psi > 0))
      throw ConfigError("gains: k_p, k_d and k_psi must be positive");
    if (!(k_i >= 0)) throw ConfigError("gains: k_i must be nonnegative");
    if (!(eta_limit > 0)) throw ConfigError("gains: eta_limit must be positive");
    if (!(mu3_margin > 0)) throw ConfigError("gains: mu3_margin must be positive");
  }

  friend bool operator==(const Gains&, const Gains&) = default;
};

template <typename Scalar>
struct IntegratorState {
  Vector3<Scalar> eta_p = Vector3<Scalar>::Zero();
};

template <typename Scalar>
struct VirtualInput {
  Vector3<Scalar> mu_p = Vector3<Scalar>::Zero();
  Scalar mu_psi{0};
  bool mu3_clamped = false;
};

/// mu_p = a_d - k_p (p - p_d) - k_d (v - v_d) - k_i eta_p
/// mu_psi = psi_dot_d - k_psi (psi - psi_d)
/// with mu_3 clamped below g - mu3_margin.
template <typename Scalar>
VirtualInput<Scalar> tracking_virtual_input(const ReducedState<Scalar>& x, const ReferencePoint& ref,
                                            const Gains<Scalar>& gains, const IntegratorState<Scalar>& eta,
                                            const VehicleParams<Scalar>& params) {
  VirtualInput<Scalar> mu;
  mu.mu_p = ref.acceleration.template cast<Scalar>() - gains.k_p * (x.p - ref.position.template cast<Scalar>()) -
            gains.k_d * (x.v - ref.velocity.template cast<Scalar>()) - gains.k_i * eta.eta_p;
  mu.mu_psi = Scalar(ref.yaw_rate) - gains.k_psi * (x.psi - Scalar(ref.yaw));
  const Scalar ceiling = params.gravity - gains.mu3_margin;
  if (mu.mu_p(2) > ceiling) {
    mu.mu_p(2) = ceiling;
    mu.mu3_clamped = true;
  }
  return mu;
}

/// Exact inversion: f = -m (mu_3 - g) / (c_phi c_theta),
/// u~ = Q(psi)^T [mu_1; mu_2] / (mu_3 - g), theta = atan(u~_2),
/// phi = atan(cos(theta) u~_1). Throws when mu_3 >= g - max(margin, eps).
template <typename Scalar>
ControlInput<Scalar> feedback_linearize(const VirtualInput<Scalar>& mu, Scalar psi,
                                        const VehicleParams<Scalar>& params, Scalar margin = Scalar(0)) {
  using std::atan;
  using std::cos;
  using std::sin;
  const Scalar guard = std::max(margin, params.singularity_eps);
  const Scalar vertical = mu.mu_p(2) - params.gravity;  // negative when well posed
  if (!(vertical < -guard)) {
    throw SingularAttitudeError("feedback_linearize: mu_3 = " + std::to_string(double(mu.mu_p(2))) +
                                " is not below g by the required margin");
  }
  const Scalar s = sin(psi), c = cos(psi);
  // Q(psi) = [[s, c], [-c, s]], inverse = transpose
  const Scalar u1 = (s * mu.mu_p(0) - c * mu.mu_p(1)) / vertical;
  const Scalar u2 = (c * mu.mu_p(0) + s * mu.mu_p(1)) / vertical;
  ControlInput<Scalar> u;
  u.pitch = atan(u2);
  u.roll = atan(cos(u.pitch) * u1);
  u.thrust = -params.mass * vertical / (cos(u.roll) * cos(u.pitch));
  u.yaw_rate = mu.mu_psi;
  return u;
}

/// eta <- clamp(eta + error * h, +-eta_limit), per component.
template <typename Scalar>
IntegratorState<Scalar> update_integrator(const IntegratorState<Scalar>& eta, const Vector3<Scalar>& position_error,
                                          Scalar h, const Gains<Scalar>& gains) {
  if (!(h > 0)) throw ConfigError("update_integrator: h must be positive");
  IntegratorState<Scalar> next;
  next.eta_p = (eta.eta_p + position_error * h).cwiseMax(-gains.eta_limit).cwiseMin(gains.eta_limit);
  return next;
}

using Gainsd = Gains<double>;
using IntegratorStated = IntegratorState<double>;
using VirtualInputd = VirtualInput<double>;

}  // namespace vtolreg
