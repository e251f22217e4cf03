#include "vtolreg/maneuver_regulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "vtolreg/errors.hpp"

namespace vtolreg {

namespace {

constexpr double kAmbiguityRatio = 1.01;
// Relative band inside which two scan values count as a tie.
constexpr double kTieRelTol = 1e-12;
constexpr int kPolishIterations = 4;

}  // namespace

void ProjectionConfig::validate() const {
  const double scale = std::max(1.0, metric_P.norm());
  if ((metric_P - metric_P.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ConfigError("projection: metric P must be symmetric");
  Eigen::LLT<StateMatrixd> llt(metric_P);
  if (llt.info() != Eigen::Success) throw ConfigError("projection: metric P must be positive definite");
  if (!(refine_tol > 0) || !(refine_tol < grid_step))
    throw ConfigError("projection: refine_tol must be positive and below grid_step");
  if (!(grid_step <= window_halfwidth))
    throw ConfigError("projection: grid_step must not exceed window_halfwidth");
  if (tube_threshold && !(*tube_threshold > 0))
    throw ConfigError("projection: tube_threshold must be positive");
}

double golden_section_minimize(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

ProjectionResult project(const StateVectord& z, const Maneuver& maneuver, const ProjectionConfig& cfg,
                         const ProjectionState& state) {
  const long n_intervals = maneuver.intervals();
  const double step = maneuver.grid_step();
  const bool closed = maneuver.closed();

  long k_lo = 0;
  long k_hi = closed ? n_intervals - 1 : n_intervals;
  bool full_cycle = closed;
  if (state.initialized) {
    const double center = (state.tau_prev - maneuver.tau_min()) / step;
    const double half = cfg.window_halfwidth / step;
    k_lo = static_cast<long>(std::ceil(center - half));
    k_hi = static_cast<long>(std::floor(center + half));
    full_cycle = false;
    if (closed && k_hi - k_lo + 1 >= n_intervals) {
      k_lo = static_cast<long>(std::llround(center)) - n_intervals / 2;
      k_hi = k_lo + n_intervals - 1;
      full_cycle = true;
    }
    if (!closed) {
      k_lo = std::max<long>(k_lo, 0);
      k_hi = std::min<long>(k_hi, n_intervals);
    }
  }
  if (k_lo > k_hi) {
    throw ProjectionError("project: search window is empty (tau_prev = " + std::to_string(state.tau_prev) + ")");
  }

  const std::size_t count = static_cast<std::size_t>(k_hi - k_lo + 1);
  std::vector<double> dist(count);
  std::size_t best = 0;
  for (std::size_t j = 0; j < count; ++j) {
    dist[j] = weighted_distance_sq(z, maneuver.node_state(k_lo + static_cast<long>(j)), cfg.metric_P);
    if (dist[j] < dist[best]) best = j;
  }

  // Strict local minima; window edges only count where the curve really ends.
  std::vector<double> minima;
  for (std::size_t j = 0; j < count; ++j) {
    const bool has_left = j > 0 || full_cycle;
    const bool has_right = j + 1 < count || full_cycle;
    const double left = j > 0 ? dist[j - 1] : dist[count - 1];
    const double right = j + 1 < count ? dist[j + 1] : dist[0];
    const long k = k_lo + static_cast<long>(j);
    const bool domain_left_end = !closed && k == 0;
    const bool domain_right_end = !closed && k == n_intervals;
    if (!has_left && !domain_left_end) continue;
    if (!has_right && !domain_right_end) continue;
    const bool below_left = !has_left || dist[j] < left;
    const bool below_right = !has_right || dist[j] <= right;
    if (below_left && below_right) minima.push_back(dist[j]);
  }
  bool ambiguous = false;
  if (minima.size() >= 2) {
    std::sort(minima.begin(), minima.end());
    ambiguous = minima[1] <= kAmbiguityRatio * minima[0] + std::numeric_limits<double>::min();
  }

  const long k_best = k_lo + static_cast<long>(best);
  double lo = maneuver.node_tau(k_best - 1);
  double hi = maneuver.node_tau(k_best + 1);
  if (!closed) {
    lo = std::max(lo, maneuver.tau_min());
    hi = std::min(hi, maneuver.tau_max());
  }
  auto cost = [&](double tau) { return weighted_distance_sq(z, maneuver.state(tau), cfg.metric_P); };
  double tau_star = maneuver.node_tau(k_best);
  double dist_star = dist[best];
  const double tau_refined = golden_section_minimize(cost, lo, hi, cfg.refine_tol);
  const double dist_refined = cost(tau_refined);
  if (dist_refined <= dist_star) {
    tau_star = tau_refined;
    dist_star = dist_refined;
  }
  // Gauss-Newton polish on the stationarity condition e^T P dz_d/dtau = 0.
  for (int it = 0; it < kPolishIterations; ++it) {
    const ReferencePoint ref = maneuver.eval(tau_star);
    const StateVectord rate = ref.state_rate();
    const double curvature = rate.dot(cfg.metric_P * rate);
    if (!(curvature > 0)) break;
    const double delta = (z - ref.state()).dot(cfg.metric_P * rate) / curvature;
    const double candidate = tau_star + delta;
    if (!(candidate >= lo && candidate <= hi)) break;
    const double d = cost(candidate);
    if (!(d <= dist_star)) break;
    const bool converged = std::abs(delta) <= 1e-15 * std::max(1.0, std::abs(tau_star));
    tau_star = candidate;
    dist_star = d;
    if (converged) break;
  }

  if (cfg.forward_only && state.initialized && tau_star < state.tau_prev) {
    tau_star = state.tau_prev;
    dist_star = cost(tau_star);
  }

  ProjectionResult result;
  result.tau_star = tau_star;
  result.dist_sq = dist_star;
  result.ambiguous = ambiguous;
  result.outside_tube = cfg.tube_threshold.has_value() && dist_star > *cfg.tube_threshold;
  result.state = {tau_star, true};
  return result;
}

double project_brute_force(const StateVectord& z, const Maneuver& maneuver, const StateMatrixd& P, double dtau) {
  if (!(dtau > 0)) throw ConfigError("project_brute_force: dtau must be positive");
  const double length = maneuver.period();
  const auto samples = static_cast<long>(std::floor(length / dtau + 1e-9));
  const long last = maneuver.closed() && samples * dtau >= length - 1e-12 ? samples - 1 : samples;
  double best_tau = maneuver.tau_min();
  double best = std::numeric_limits<double>::infinity();
  for (long i = 0; i <= last; ++i) {
    const double tau = maneuver.tau_min() + static_cast<double>(i) * dtau;
    const double d = weighted_distance_sq(z, maneuver.state(tau), P);
    if (d < best - kTieRelTol * std::abs(best) || !std::isfinite(best)) {
      best = d;
      best_tau = tau;
    }
  }
  return best_tau;
}

RegulationOutput regulation_control(const ReducedStated& x, const Maneuver& maneuver, const Gainsd& gains,
                                    const IntegratorStated& eta, const ProjectionConfig& cfg,
                                    const ProjectionState& state, const VehicleParamsd& params) {
  RegulationOutput out;
  const StateVectord z = x.as_vector();
  out.diagnostics.projection = project(z, maneuver, cfg, state);
  out.diagnostics.reference = maneuver.eval(out.diagnostics.projection.tau_star);
  out.diagnostics.error = z - out.diagnostics.reference.state();
  out.diagnostics.virtual_input = tracking_virtual_input(x, out.diagnostics.reference, gains, eta, params);
  out.input = feedback_linearize(out.diagnostics.virtual_input, x.psi, params);
  return out;
}

StateMatrixd default_metric(const Gainsd& gains) {
  const LyapunovCertificated cert = certify<double>(gains, false);
  if (!cert.passed()) throw NotHurwitzError("default_metric: Lyapunov certificate failed");
  return cert.P;
}

StateMatrixd position_weighted_metric(double velocity_weight, double yaw_weight) {
  StateVectord diag;
  diag << 1.0, 1.0, 1.0, velocity_weight, velocity_weight, velocity_weight, yaw_weight;
  return diag.asDiagonal();
}

}  // namespace vtolreg
