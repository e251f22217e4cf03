#include "vtolreg/experiment.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <sstream>

#include "vtolreg/errors.hpp"

namespace vtolreg {

using nlohmann::json;

namespace {

const char* const kSchemaLine = "# schema_version=1";

void put_number(std::ostream& out, double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  out.write(buf, res.ptr - buf);
}

double parse_number(const std::string& field) {
  double value = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    // from_chars does not accept "inf"/"nan"; to_chars emits them.
    if (field == "inf") return std::numeric_limits<double>::infinity();
    if (field == "-inf") return -std::numeric_limits<double>::infinity();
    if (field == "nan" || field == "-nan") return std::numeric_limits<double>::quiet_NaN();
    throw ConfigError("trace: malformed number '" + field + "'");
  }
  return value;
}

json nullable(double value) { return std::isfinite(value) ? json(value) : json(nullptr); }

json ratio(double tracking, double regulation) {
  if (regulation == 0.0) return tracking == 0.0 ? json(1.0) : json(nullptr);
  return tracking / regulation;
}

}  // namespace

const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> columns = {
      "t",    "tau",     "p1",  "p2",  "p3",  "v1",    "v2", "v3",      "psi",       "pd1",   "pd2",     "pd3",
      "vd1",  "vd2",     "vd3", "ad1", "ad2", "ad3",   "psid", "psidotd", "mu1",     "mu2",   "mu3",     "mupsi",
      "f",    "phi_cmd", "theta_cmd", "sat_f", "sat_phi", "sat_theta", "d1", "d2", "d3", "dist_sq", "eta1", "eta2",
      "eta3"};
  return columns;
}

void write_trace_csv(const TraceLog& trace, std::ostream& out) {
  out << kSchemaLine << '\n';
  const auto& cols = trace_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const TraceRecord& r : trace.records) {
    const double row[] = {r.t,
                          r.tau,
                          r.x.p(0),
                          r.x.p(1),
                          r.x.p(2),
                          r.x.v(0),
                          r.x.v(1),
                          r.x.v(2),
                          r.x.psi,
                          r.reference.position(0),
                          r.reference.position(1),
                          r.reference.position(2),
                          r.reference.velocity(0),
                          r.reference.velocity(1),
                          r.reference.velocity(2),
                          r.reference.acceleration(0),
                          r.reference.acceleration(1),
                          r.reference.acceleration(2),
                          r.reference.yaw,
                          r.reference.yaw_rate,
                          r.mu.mu_p(0),
                          r.mu.mu_p(1),
                          r.mu.mu_p(2),
                          r.mu.mu_psi,
                          r.u.thrust,
                          r.u.roll,
                          r.u.pitch,
                          r.saturation.thrust ? 1.0 : 0.0,
                          r.saturation.roll ? 1.0 : 0.0,
                          r.saturation.pitch ? 1.0 : 0.0,
                          r.disturbance(0),
                          r.disturbance(1),
                          r.disturbance(2),
                          r.dist_sq,
                          r.eta(0),
                          r.eta(1),
                          r.eta(2)};
    for (std::size_t i = 0; i < std::size(row); ++i) {
      if (i) out << ',';
      put_number(out, row[i]);
    }
    out << '\n';
  }
}

void write_trace_csv(const TraceLog& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write trace " + path.string());
  write_trace_csv(trace, out);
}

TraceLog read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kSchemaLine)
    throw ConfigError("trace " + path.string() + ": missing or unsupported schema line (expected '" +
                      std::string(kSchemaLine) + "')");
  std::getline(in, line);
  std::string expected;
  for (std::size_t i = 0; i < trace_columns().size(); ++i) expected += (i ? "," : "") + trace_columns()[i];
  if (line != expected) throw ConfigError("trace " + path.string() + ": header does not match the trace schema");

  TraceLog trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) v.push_back(parse_number(field));
    if (v.size() != trace_columns().size()) throw ConfigError("trace " + path.string() + ": wrong column count");
    TraceRecord r;
    r.t = v[0];
    r.tau = v[1];
    r.x.p = {v[2], v[3], v[4]};
    r.x.v = {v[5], v[6], v[7]};
    r.x.psi = v[8];
    r.reference.position = {v[9], v[10], v[11]};
    r.reference.velocity = {v[12], v[13], v[14]};
    r.reference.acceleration = {v[15], v[16], v[17]};
    r.reference.yaw = v[18];
    r.reference.yaw_rate = v[19];
    r.mu.mu_p = {v[20], v[21], v[22]};
    r.mu.mu_psi = v[23];
    r.u = {v[24], v[25], v[26], v[23]};
    r.saturation = {v[27] != 0.0, v[28] != 0.0, v[29] != 0.0};
    r.disturbance = {v[30], v[31], v[32]};
    r.dist_sq = v[33];
    r.eta = {v[34], v[35], v[36]};
    trace.records.push_back(r);
  }
  return trace;
}

Metrics compute_metrics(const TraceLog& trace, const Maneuver& maneuver, bool diverged) {
  Metrics m;
  m.diverged = diverged;
  m.samples = trace.records.size();
  if (trace.records.empty()) {
    m.settling_time = std::numeric_limits<double>::quiet_NaN();
    return m;
  }
  double speed_sum = 0.0, ref_speed_sum = 0.0;
  std::size_t saturated = 0;
  std::ptrdiff_t last_outside = -1;
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    const TraceRecord& r = trace.records[k];
    const double speed = r.x.v.norm();
    m.peak_speed = std::max(m.peak_speed, speed);
    speed_sum += speed;
    ref_speed_sum += r.reference.velocity.norm();
    m.peak_thrust = std::max(m.peak_thrust, r.u.thrust);
    if (r.saturation.thrust) ++saturated;
    m.max_path_deviation = std::max(m.max_path_deviation, maneuver.path_distance(r.x.p));
    m.peak_virtual_input = std::max(m.peak_virtual_input, r.mu.mu_p.norm());
    if ((r.x.p - r.reference.position).norm() >= kSettlingTube) last_outside = static_cast<std::ptrdiff_t>(k);
  }
  const double n = static_cast<double>(trace.records.size());
  m.mean_speed = speed_sum / n;
  m.mean_reference_speed = ref_speed_sum / n;
  m.speed_deficit = m.mean_reference_speed > 0 ? 1.0 - m.mean_speed / m.mean_reference_speed : 0.0;
  m.thrust_saturation_duty = static_cast<double>(saturated) / n;
  m.final_tau = trace.records.back().tau;
  const auto settle_index = static_cast<std::size_t>(last_outside + 1);
  m.settling_time = settle_index < trace.records.size() ? trace.records[settle_index].t
                                                        : std::numeric_limits<double>::quiet_NaN();
  return m;
}

json metrics_to_json(const Metrics& m) {
  return {{"samples", m.samples},
          {"peak_speed", m.peak_speed},
          {"mean_speed", m.mean_speed},
          {"mean_reference_speed", m.mean_reference_speed},
          {"speed_deficit", m.speed_deficit},
          {"peak_thrust", m.peak_thrust},
          {"thrust_saturation_duty", m.thrust_saturation_duty},
          {"max_path_deviation", m.max_path_deviation},
          {"settling_time", nullable(m.settling_time)},
          {"peak_virtual_input", m.peak_virtual_input},
          {"final_tau", m.final_tau},
          {"diverged", m.diverged},
          {"termination", m.termination}};
}

ReducedStated apply_hold(const ReducedStated& x, const std::optional<HoldSpec>& hold, const Vector3d& hold_point,
                         double t) {
  if (!hold || !hold->active_at(t)) return x;
  return clamp_to_hold(x, hold_point);
}

DisturbanceInputd drag_force(const Vector3d& velocity, const DragSpec& drag, const VehicleParamsd& params) {
  if (!(drag.magnitude >= 0)) throw ConfigError("drag: magnitude must be nonnegative");
  Vector3d v = velocity;
  if (drag.horizontal_only) v(2) = 0.0;
  DisturbanceInputd d;
  d.force = -(drag.magnitude / params.mass) * v / (v.norm() + drag.epsilon);
  return d;
}

RunResult run_scenario(const Scenario& s) {
  s.validate();
  const Maneuver maneuver = s.maneuver.build();
  const ProjectionConfig cfg = s.projection_config();
  const VehicleParamsd& params = s.vehicle;
  const double h = s.plant_step;
  const double control_dt = s.control_period();
  const bool regulation = s.mode == ControllerMode::Regulation;
  const Vector3d hold_point =
      s.hold && s.hold->position ? *s.hold->position : maneuver.eval(maneuver.tau_min()).position;

  RunResult result;
  bool diverged = false;
  std::string termination = "duration";

  LaggedState<double> plant;
  plant.body = apply_hold(s.initial_state(maneuver), s.hold, hold_point, 0.0);
  {
    const ControlInputd start = nominal_input(maneuver.eval(maneuver.tau_min()), params);
    plant.roll = start.roll;
    plant.pitch = start.pitch;
  }
  IntegratorStated eta;
  ProjectionState projection;
  ControlInputd command;

  const auto steps = static_cast<long>(std::llround(s.duration / h));
  for (long i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) * h;
    const ReducedStated& x = plant.body;
    if (!x.all_finite()) {
      diverged = true;
      termination = "non-finite state";
      break;
    }
    const bool holding = s.hold && s.hold->active_at(t);

    if (i % s.control_divider == 0) {
      if (maneuver.path_distance(x.p) > kDivergenceDeviation) {
        diverged = true;
        termination = "deviation";
        break;
      }
      TraceRecord rec;
      rec.t = t;
      rec.x = x;
      rec.eta = eta.eta_p;
      try {
        if (regulation) {
          const RegulationOutput out = regulation_control(x, maneuver, s.gains, eta, cfg, projection, params);
          projection = out.diagnostics.projection.state;
          rec.tau = out.diagnostics.projection.tau_star;
          rec.reference = out.diagnostics.reference;
          rec.mu = out.diagnostics.virtual_input;
          rec.dist_sq = out.diagnostics.projection.dist_sq;
          rec.ambiguous = out.diagnostics.projection.ambiguous;
          command = out.input;
        } else {
          rec.tau = maneuver.tau_min() + t;
          rec.reference = maneuver.eval(rec.tau);
          rec.mu = tracking_virtual_input(x, rec.reference, s.gains, eta, params);
          rec.dist_sq = weighted_distance_sq(x.as_vector(), rec.reference.state(), cfg.metric_P);
          command = feedback_linearize(rec.mu, x.psi, params);
        }
      } catch (const Error& e) {
        result.error = e.what();
        diverged = true;
        termination = "controller error";
        break;
      }
      const SaturatedInput<double> sat = saturate(command, params);
      command = sat.input;
      rec.u = command;
      rec.saturation = sat.flags;
      if (!(holding && s.hold->freeze_integrator)) {
        eta = update_integrator(eta, Vector3d(x.p - rec.reference.position), control_dt, s.gains);
      }
      if (s.drag) rec.disturbance = drag_force(x.v, *s.drag, params).force;
      result.trace.records.push_back(rec);

      if (regulation && s.end_on_completion && !maneuver.closed() &&
          rec.tau >= maneuver.tau_max() - maneuver.grid_step()) {
        termination = "completed";
        break;
      }
    }

    DisturbanceInputd d = s.drag ? drag_force(x.v, *s.drag, params) : DisturbanceInputd{};
    d.hold_active = holding;
    d.hold_position = hold_point;
    try {
      plant = step_lagged(plant, command, d, h, params);
    } catch (const Error& e) {
      result.error = e.what();
      diverged = true;
      termination = "plant error";
      break;
    }
  }

  result.metrics = compute_metrics(result.trace, maneuver, diverged);
  result.metrics.termination = termination;
  return result;
}

Comparison compare(const Scenario& tracking, const Scenario& regulation) {
  if (tracking.mode != ControllerMode::Tracking || regulation.mode != ControllerMode::Regulation)
    throw ScenarioMismatchError("compare: expected one tracking and one regulation scenario");
  json a = scenario_to_json(tracking);
  json b = scenario_to_json(regulation);
  for (json* j : {&a, &b}) {
    j->erase("mode");
    j->erase("name");
  }
  if (a != b) throw ScenarioMismatchError("compare: scenarios differ beyond the controller mode");

  auto tracking_run = std::async(std::launch::async, [&] { return run_scenario(tracking); });
  Comparison c;
  c.regulation = run_scenario(regulation);
  c.tracking = tracking_run.get();

  const Metrics& mt = c.tracking.metrics;
  const Metrics& mr = c.regulation.metrics;
  json summary;
  summary["schema_version"] = kSchemaVersion;
  summary["scenario"] = a;
  summary["tracking"] = metrics_to_json(mt);
  summary["regulation"] = metrics_to_json(mr);
  summary["ratios"] = {{"peak_speed", ratio(mt.peak_speed, mr.peak_speed)},
                       {"peak_thrust", ratio(mt.peak_thrust, mr.peak_thrust)},
                       {"thrust_saturation_duty", ratio(mt.thrust_saturation_duty, mr.thrust_saturation_duty)},
                       {"max_path_deviation", ratio(mt.max_path_deviation, mr.max_path_deviation)},
                       {"peak_virtual_input", ratio(mt.peak_virtual_input, mr.peak_virtual_input)},
                       {"mean_speed", ratio(mt.mean_speed, mr.mean_speed)}};
  summary["verdicts"] = {{"regulation_lower_peak_speed", mr.peak_speed < mt.peak_speed},
                         {"regulation_lower_path_deviation", mr.max_path_deviation < mt.max_path_deviation},
                         {"regulation_thrust_unsaturated", mr.thrust_saturation_duty == 0.0},
                         {"tracking_thrust_saturated", mt.thrust_saturation_duty > 0.0},
                         {"tracking_diverged", mt.diverged},
                         {"regulation_diverged", mr.diverged}};
  c.summary = summary;
  return c;
}

void write_comparison(const Comparison& c, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_trace_csv(c.tracking.trace, out_dir / "tracking_trace.csv");
  write_trace_csv(c.regulation.trace, out_dir / "regulation_trace.csv");
  std::ofstream out(out_dir / "summary.json");
  if (!out) throw ConfigError("cannot write " + (out_dir / "summary.json").string());
  out << c.summary.dump(2) << '\n';
}

std::vector<std::filesystem::path> write_plot_data(const TraceLog& trace, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  auto open = [&](const char* name, const char* header) {
    const std::filesystem::path path = out_dir / name;
    auto out = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*out) throw ConfigError("cannot write " + path.string());
    *out << header << '\n';
    written.push_back(path);
    return out;
  };
  auto row = [](std::ostream& out, double t, const char* series, std::initializer_list<double> values) {
    put_number(out, t);
    out << ',' << series;
    for (double v : values) {
      out << ',';
      put_number(out, v);
    }
    out << '\n';
  };

  auto path = open("path.csv", "t,series,x,y");
  auto positions = open("positions.csv", "t,series,p1,p2,p3");
  auto speed = open("speed.csv", "t,series,value");
  auto roll = open("roll.csv", "t,series,value");
  auto pitch = open("pitch.csv", "t,series,value");
  auto thrust = open("thrust.csv", "t,series,value");
  auto tau = open("tau.csv", "t,series,value");
  for (const TraceRecord& r : trace.records) {
    row(*path, r.t, "desired", {r.reference.position(0), r.reference.position(1)});
    row(*path, r.t, "actual", {r.x.p(0), r.x.p(1)});
    row(*positions, r.t, "desired", {r.reference.position(0), r.reference.position(1), r.reference.position(2)});
    row(*positions, r.t, "actual", {r.x.p(0), r.x.p(1), r.x.p(2)});
    row(*speed, r.t, "desired", {r.reference.velocity.norm()});
    row(*speed, r.t, "actual", {r.x.v.norm()});
    row(*roll, r.t, "command", {r.u.roll});
    row(*pitch, r.t, "command", {r.u.pitch});
    row(*thrust, r.t, "actual", {r.u.thrust});
    row(*tau, r.t, "projection", {r.tau});
  }
  return written;
}

}  // namespace vtolreg
