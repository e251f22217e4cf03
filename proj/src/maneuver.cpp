#include "vtolreg/maneuver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "vtolreg/errors.hpp"
#include "vtolreg/tracking_controller.hpp"

namespace vtolreg {

namespace {

double segment_distance(const Vector3d& q, const Vector3d& a, const Vector3d& b) {
  const Vector3d ab = b - a;
  const double len_sq = ab.squaredNorm();
  if (len_sq == 0.0) return (q - a).norm();
  const double s = std::clamp((q - a).dot(ab) / len_sq, 0.0, 1.0);
  return (q - (a + s * ab)).norm();
}

}  // namespace

Maneuver::Maneuver(std::string kind, ManeuverDomain domain, EvalFn eval, double grid_step,
                   std::vector<double> knots)
    : kind_(std::move(kind)), domain_(domain), eval_(std::move(eval)), knots_(std::move(knots)) {
  if (!(grid_step > 0)) throw ConfigError("maneuver: grid step must be positive");
  const double length = domain_.tau_max - domain_.tau_min;
  if (!(length > 0)) throw ConfigError("maneuver: empty parameter domain");
  intervals_ = std::max<long>(1, static_cast<long>(std::ceil(length / grid_step - 1e-9)));
  grid_step_ = length / static_cast<double>(intervals_);

  // Closed: nodes 0..N-1 (node N coincides with node 0). Open: nodes 0..N.
  const long nodes = domain_.closed ? intervals_ : intervals_ + 1;
  table_.reserve(static_cast<std::size_t>(nodes));
  for (long k = 0; k < nodes; ++k) {
    const double tau = k == intervals_ ? domain_.tau_max : node_tau(k);
    table_.push_back(eval_(tau).state());
  }

  const long segments = intervals_;
  path_.reserve(static_cast<std::size_t>(segments + 1));
  for (long k = 0; k <= segments; ++k) {
    const double tau = k == segments ? domain_.tau_max
                                     : domain_.tau_min + length * static_cast<double>(k) / segments;
    path_.push_back(eval_(tau).position);
  }
}

double Maneuver::wrap(double tau) const {
  if (domain_.closed) {
    const double period = this->period();
    double local = std::fmod(tau - domain_.tau_min, period);
    if (local < 0) local += period;
    return domain_.tau_min + local;
  }
  return std::clamp(tau, domain_.tau_min, domain_.tau_max);
}

ReferencePoint Maneuver::eval(double tau) const { return eval_(wrap(tau)); }

const StateVectord& Maneuver::node_state(long k) const {
  const long n = static_cast<long>(table_.size());
  if (domain_.closed) {
    long idx = k % n;
    if (idx < 0) idx += n;
    return table_[static_cast<std::size_t>(idx)];
  }
  return table_[static_cast<std::size_t>(std::clamp<long>(k, 0, n - 1))];
}

double Maneuver::path_distance(const Vector3d& position) const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < path_.size(); ++i) {
    best = std::min(best, segment_distance(position, path_[i], path_[i + 1]));
  }
  if (path_.size() == 1) best = (position - path_.front()).norm();
  return best;
}

Maneuver circle(double radius, double speed, const Vector3d& center, double yaw, double grid_step) {
  if (!(radius > 0) || !(speed > 0)) throw ConfigError("circle: radius and speed must be positive");
  const double omega = speed / radius;
  const double period = 2.0 * M_PI / omega;
  auto eval = [=](double tau) {
    const double c = std::cos(omega * tau), s = std::sin(omega * tau);
    ReferencePoint ref;
    ref.position = center + radius * Vector3d(c, s, 0.0);
    ref.velocity = speed * Vector3d(-s, c, 0.0);
    ref.acceleration = -speed * omega * Vector3d(c, s, 0.0);
    ref.yaw = yaw;
    ref.yaw_rate = 0.0;
    return ref;
  };
  return Maneuver("circle", {0.0, period, true}, eval, grid_step);
}

Maneuver turn90(double speed, double leg_length, double fillet_radius, const Vector3d& start, double yaw,
                double heading, double grid_step) {
  if (!(speed > 0) || !(leg_length > 0) || !(fillet_radius > 0))
    throw ConfigError("turn90: speed, leg_length and fillet_radius must be positive");
  const Vector3d dir1(std::cos(heading), std::sin(heading), 0.0);
  const Vector3d dir2(-std::sin(heading), std::cos(heading), 0.0);  // left of dir1
  const double t1 = leg_length / speed;
  const double t2 = t1 + 0.5 * M_PI * fillet_radius / speed;
  const double t3 = t2 + leg_length / speed;
  const Vector3d corner = start + leg_length * dir1;
  const Vector3d center = corner + fillet_radius * dir2;
  const Vector3d exit = center + fillet_radius * dir1;
  const double omega = speed / fillet_radius;

  auto eval = [=](double tau) {
    ReferencePoint ref;
    ref.yaw = yaw;
    if (tau < t1) {
      ref.position = start + speed * tau * dir1;
      ref.velocity = speed * dir1;
    } else if (tau < t2) {
      // angle swept along the fillet; the radial vector starts at -dir2
      const double a = omega * (tau - t1);
      const Vector3d radial = -std::cos(a) * dir2 + std::sin(a) * dir1;
      const Vector3d tangent = std::sin(a) * dir2 + std::cos(a) * dir1;
      ref.position = center + fillet_radius * radial;
      ref.velocity = speed * tangent;
      ref.acceleration = -speed * omega * radial;
    } else {
      ref.position = exit + speed * (tau - t2) * dir2;
      ref.velocity = speed * dir2;
    }
    return ref;
  };
  return Maneuver("turn90", {0.0, t3, false}, eval, grid_step, {t1, t2});
}

Maneuver hover(const Vector3d& position, double duration, double yaw, double grid_step) {
  if (!(duration > 0)) throw ConfigError("hover: duration must be positive");
  auto eval = [=](double) {
    ReferencePoint ref;
    ref.position = position;
    ref.yaw = yaw;
    return ref;
  };
  return Maneuver("hover", {0.0, duration, false}, eval, grid_step);
}

DerivativeReport validate_derivatives(const Maneuver& maneuver, double dt, double tol) {
  if (!(dt > 0)) throw ConfigError("validate_derivatives: dt must be positive");
  DerivativeReport report;
  const long nodes = maneuver.closed() ? maneuver.intervals() : maneuver.intervals() + 1;
  for (long k = 0; k < nodes; ++k) {
    const double tau = maneuver.node_tau(k);
    if (!maneuver.closed() && (tau - 2 * dt < maneuver.tau_min() || tau + 2 * dt > maneuver.tau_max())) continue;
    const bool near_knot = std::any_of(maneuver.knots().begin(), maneuver.knots().end(),
                                       [&](double knot) { return std::abs(tau - knot) < 2 * dt; });
    if (near_knot) continue;

    const ReferencePoint ahead = maneuver.eval(tau + dt);
    const ReferencePoint behind = maneuver.eval(tau - dt);
    const ReferencePoint here = maneuver.eval(tau);
    const double dv = ((ahead.position - behind.position) / (2 * dt) - here.velocity).norm();
    const double da = ((ahead.velocity - behind.velocity) / (2 * dt) - here.acceleration).norm();
    const double dyaw = std::abs((ahead.yaw - behind.yaw) / (2 * dt) - here.yaw_rate);
    const double worst = std::max({dv, da, dyaw});
    report.max_velocity_deviation = std::max(report.max_velocity_deviation, dv);
    report.max_acceleration_deviation = std::max(report.max_acceleration_deviation, da);
    if (worst > report.max_deviation) {
      report.max_deviation = worst;
      report.tau_at_max = tau;
    }
    if (worst > tol) report.offending_taus.push_back(tau);
  }
  if (!report.offending_taus.empty()) {
    std::ostringstream msg;
    msg << maneuver.kind() << ": derivative mismatch " << report.max_deviation << " > " << tol << " at tau =";
    const std::size_t shown = std::min<std::size_t>(report.offending_taus.size(), 8);
    for (std::size_t i = 0; i < shown; ++i) msg << ' ' << report.offending_taus[i];
    if (shown < report.offending_taus.size()) msg << " ... (" << report.offending_taus.size() << " nodes)";
    throw InconsistentDerivativeError(msg.str());
  }
  return report;
}

ControlInputd nominal_input(const ReferencePoint& ref, const VehicleParamsd& params) {
  if (!(ref.acceleration(2) < params.gravity))
    throw SingularAttitudeError("nominal_input: reference vertical acceleration must stay below g");
  VirtualInputd mu;
  mu.mu_p = ref.acceleration;
  mu.mu_psi = ref.yaw_rate;
  return feedback_linearize(mu, ref.yaw, params);
}

}  // namespace vtolreg
