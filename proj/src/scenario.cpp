#include "vtolreg/scenario.hpp"

#include <fstream>

#include "vtolreg/errors.hpp"

namespace vtolreg {

using nlohmann::json;

namespace {

Vector3d vec3_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(what) + ": expected an array of 3 numbers");
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

json vec3_to_json(const Vector3d& v) { return json::array({v(0), v(1), v(2)}); }

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

StateMatrixd matrix7_from_json(const json& j) {
  if (!j.is_array() || j.size() != 7) throw ConfigError("projection.metric: expected a 7x7 row-major array");
  StateMatrixd P;
  for (int r = 0; r < 7; ++r) {
    if (!j[r].is_array() || j[r].size() != 7) throw ConfigError("projection.metric: expected 7 columns per row");
    for (int c = 0; c < 7; ++c) P(r, c) = j[r][c].get<double>();
  }
  return P;
}

json matrix_to_json(const StateMatrixd& P) {
  json rows = json::array();
  for (int r = 0; r < 7; ++r) {
    json row = json::array();
    for (int c = 0; c < 7; ++c) row.push_back(P(r, c));
    rows.push_back(row);
  }
  return rows;
}

ManeuverSpec maneuver_from_json(const json& j) {
  ManeuverSpec spec;
  const std::string kind = j.at("kind").get<std::string>();
  spec.yaw = value_or(j, "psi_d", 0.0);
  spec.grid_step = value_or(j, "grid_step", kDefaultGridStep);
  if (kind == "circle") {
    CircleSpec c;
    c.radius = value_or(j, "radius", c.radius);
    c.speed = value_or(j, "speed", c.speed);
    if (j.contains("center")) c.center = vec3_from_json(j.at("center"), "maneuver.center");
    spec.shape = c;
  } else if (kind == "turn90") {
    Turn90Spec t;
    t.speed = value_or(j, "speed", t.speed);
    t.leg_length = value_or(j, "leg_length", t.leg_length);
    t.fillet_radius = value_or(j, "fillet_radius", t.fillet_radius);
    t.heading = value_or(j, "heading", t.heading);
    if (j.contains("start")) t.start = vec3_from_json(j.at("start"), "maneuver.start");
    spec.shape = t;
  } else if (kind == "hover") {
    HoverSpec h;
    h.duration = value_or(j, "duration", h.duration);
    if (j.contains("position")) h.position = vec3_from_json(j.at("position"), "maneuver.position");
    spec.shape = h;
  } else {
    throw ConfigError("maneuver.kind: unknown maneuver '" + kind + "'");
  }
  return spec;
}

json maneuver_to_json(const ManeuverSpec& spec) {
  json j;
  if (const auto* c = std::get_if<CircleSpec>(&spec.shape)) {
    j = {{"kind", "circle"}, {"radius", c->radius}, {"speed", c->speed}, {"center", vec3_to_json(c->center)}};
  } else if (const auto* t = std::get_if<Turn90Spec>(&spec.shape)) {
    j = {{"kind", "turn90"},          {"speed", t->speed},         {"leg_length", t->leg_length},
         {"fillet_radius", t->fillet_radius}, {"start", vec3_to_json(t->start)}, {"heading", t->heading}};
  } else {
    const auto& h = std::get<HoverSpec>(spec.shape);
    j = {{"kind", "hover"}, {"position", vec3_to_json(h.position)}, {"duration", h.duration}};
  }
  j["psi_d"] = spec.yaw;
  j["grid_step"] = spec.grid_step;
  return j;
}

ProjectionSpec projection_from_json(const json& j) {
  ProjectionSpec p;
  if (j.contains("metric")) {
    const json& m = j.at("metric");
    if (m.is_string()) {
      const std::string name = m.get<std::string>();
      if (name == "lyapunov") {
        p.metric = MetricChoice::Lyapunov;
      } else if (name == "position") {
        p.metric = MetricChoice::PositionWeighted;
      } else {
        throw ConfigError("projection.metric: expected 'lyapunov', 'position' or a 7x7 matrix");
      }
    } else {
      p.metric = MetricChoice::Explicit;
      p.explicit_P = matrix7_from_json(m);
    }
  }
  p.velocity_weight = value_or(j, "velocity_weight", p.velocity_weight);
  p.yaw_weight = value_or(j, "yaw_weight", p.yaw_weight);
  p.window_halfwidth = value_or(j, "window_halfwidth", p.window_halfwidth);
  p.refine_tol = value_or(j, "refine_tol", p.refine_tol);
  p.forward_only = value_or(j, "forward_only", p.forward_only);
  if (j.contains("tube_threshold") && !j.at("tube_threshold").is_null())
    p.tube_threshold = j.at("tube_threshold").get<double>();
  return p;
}

json projection_to_json(const ProjectionSpec& p) {
  json j;
  switch (p.metric) {
    case MetricChoice::Lyapunov:
      j["metric"] = "lyapunov";
      break;
    case MetricChoice::PositionWeighted:
      j["metric"] = "position";
      j["velocity_weight"] = p.velocity_weight;
      j["yaw_weight"] = p.yaw_weight;
      break;
    case MetricChoice::Explicit:
      j["metric"] = matrix_to_json(p.explicit_P);
      break;
  }
  j["window_halfwidth"] = p.window_halfwidth;
  j["refine_tol"] = p.refine_tol;
  j["forward_only"] = p.forward_only;
  j["tube_threshold"] = p.tube_threshold ? json(*p.tube_threshold) : json(nullptr);
  return j;
}

}  // namespace

std::string to_string(ControllerMode mode) {
  return mode == ControllerMode::Tracking ? "tracking" : "regulation";
}

Maneuver ManeuverSpec::build() const {
  if (const auto* c = std::get_if<CircleSpec>(&shape)) return circle(c->radius, c->speed, c->center, yaw, grid_step);
  if (const auto* t = std::get_if<Turn90Spec>(&shape))
    return turn90(t->speed, t->leg_length, t->fillet_radius, t->start, yaw, t->heading, grid_step);
  const auto& h = std::get<HoverSpec>(shape);
  return hover(h.position, h.duration, yaw, grid_step);
}

void Scenario::validate() const {
  vehicle.validate();
  gains.validate();
  if (!(duration >= 0)) throw ConfigError("duration must be nonnegative");
  if (!(plant_step > 0)) throw ConfigError("plant_step must be positive");
  if (control_divider < 1) throw ConfigError("control_divider must be >= 1");
  if (hold) {
    if (!(hold->release < duration) && duration > 0) throw ConfigError("hold.release must be before the end of the run");
    if (!(hold->start <= hold->release)) throw ConfigError("hold.start must not be after hold.release");
  }
  if (drag) {
    if (!(drag->magnitude >= 0)) throw ConfigError("drag.magnitude must be nonnegative");
    if (!(drag->epsilon > 0)) throw ConfigError("drag.epsilon must be positive");
  }
  if (mode == ControllerMode::Regulation) projection_config().validate();
}

ProjectionConfig Scenario::projection_config() const {
  ProjectionConfig cfg;
  switch (projection.metric) {
    case MetricChoice::Lyapunov:
      cfg.metric_P = default_metric(gains);
      break;
    case MetricChoice::PositionWeighted:
      cfg.metric_P = position_weighted_metric(projection.velocity_weight, projection.yaw_weight);
      break;
    case MetricChoice::Explicit:
      cfg.metric_P = projection.explicit_P;
      break;
  }
  cfg.window_halfwidth = projection.window_halfwidth;
  cfg.refine_tol = projection.refine_tol;
  cfg.grid_step = maneuver.grid_step;
  cfg.forward_only = projection.forward_only;
  cfg.tube_threshold = projection.tube_threshold;
  return cfg;
}

ReducedStated Scenario::initial_state(const Maneuver& m) const {
  if (initial.state) return *initial.state;
  const ReferencePoint ref = m.eval(m.tau_min());
  ReducedStated x = ReducedStated::from_vector(ref.state());
  if (initial.radial_offset != 0.0) {
    const double curvature = ref.acceleration.norm();
    if (curvature == 0.0) throw ConfigError("initial.radial_offset needs a curved path at its start");
    x.p -= initial.radial_offset * ref.acceleration / curvature;
  }
  x.p += initial.position_offset;
  return x;
}

double drag_for_authority_fraction(double fraction, const VehicleParamsd& params) {
  return fraction * lateral_authority(params);
}

Gainsd gains_from_json(const json& j) {
  Gainsd g;
  g.k_p = value_or(j, "k_p", g.k_p);
  g.k_d = value_or(j, "k_d", g.k_d);
  g.k_psi = value_or(j, "k_psi", g.k_psi);
  g.k_i = value_or(j, "k_i", g.k_i);
  g.eta_limit = value_or(j, "eta_limit", g.eta_limit);
  g.mu3_margin = value_or(j, "mu3_margin", g.mu3_margin);
  g.validate();
  return g;
}

json gains_to_json(const Gainsd& g) {
  return {{"k_p", g.k_p}, {"k_d", g.k_d},           {"k_psi", g.k_psi},
          {"k_i", g.k_i}, {"eta_limit", g.eta_limit}, {"mu3_margin", g.mu3_margin}};
}

VehicleParamsd vehicle_from_json(const json& j) {
  VehicleParamsd p;
  p.mass = value_or(j, "mass", p.mass);
  p.gravity = value_or(j, "gravity", p.gravity);
  p.thrust_max = value_or(j, "f_max", p.thrust_max);
  p.angle_max = value_or(j, "angle_max", p.angle_max);
  p.attitude_lag_tau = value_or(j, "attitude_lag_tau", p.attitude_lag_tau);
  p.singularity_eps = value_or(j, "singularity_eps", p.singularity_eps);
  p.validate();
  return p;
}

static json vehicle_to_json(const VehicleParamsd& p) {
  return {{"mass", p.mass},
          {"gravity", p.gravity},
          {"f_max", p.thrust_max},
          {"angle_max", p.angle_max},
          {"attitude_lag_tau", p.attitude_lag_tau},
          {"singularity_eps", p.singularity_eps}};
}

Scenario scenario_from_json(const json& j, const std::filesystem::path& base_dir) {
  try {
    if (!j.is_object()) throw ConfigError("scenario: expected a JSON object");
    const int version = value_or(j, "schema_version", -1);
    if (version != kSchemaVersion)
      throw ConfigError("scenario: schema_version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kSchemaVersion) + ")");
    Scenario s;
    s.name = value_or(j, "name", s.name);
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "tracking") {
      s.mode = ControllerMode::Tracking;
    } else if (mode == "regulation") {
      s.mode = ControllerMode::Regulation;
    } else {
      throw ConfigError("mode: expected 'tracking' or 'regulation', got '" + mode + "'");
    }
    s.maneuver = maneuver_from_json(j.at("maneuver"));
    if (j.contains("vehicle")) s.vehicle = vehicle_from_json(j.at("vehicle"));
    if (j.contains("gains")) {
      const json& g = j.at("gains");
      if (g.is_string()) {
        const std::filesystem::path file = base_dir / g.get<std::string>();
        std::ifstream in(file);
        if (!in) throw ConfigError("gains: cannot open " + file.string());
        json gj;
        in >> gj;
        s.gains = gains_from_json(gj);
        s.gains_source = file.lexically_normal().string();
      } else {
        s.gains = gains_from_json(g);
      }
    }
    if (j.contains("projection")) s.projection = projection_from_json(j.at("projection"));
    s.duration = j.at("duration").get<double>();
    s.plant_step = value_or(j, "plant_step", s.plant_step);
    s.control_divider = value_or(j, "control_divider", s.control_divider);
    s.end_on_completion = value_or(j, "end_on_completion", s.end_on_completion);
    s.seed = value_or<std::uint64_t>(j, "seed", 0);
    if (j.contains("hold") && !j.at("hold").is_null()) {
      const json& h = j.at("hold");
      HoldSpec hold;
      if (h.contains("position") && !h.at("position").is_null())
        hold.position = vec3_from_json(h.at("position"), "hold.position");
      hold.start = value_or(h, "start", hold.start);
      hold.release = value_or(h, "release", hold.release);
      hold.freeze_integrator = value_or(h, "freeze_integrator", hold.freeze_integrator);
      s.hold = hold;
    }
    if (j.contains("drag") && !j.at("drag").is_null()) {
      const json& d = j.at("drag");
      DragSpec drag;
      if (d.contains("magnitude") == d.contains("authority_fraction"))
        throw ConfigError("drag: give exactly one of 'magnitude' or 'authority_fraction'");
      drag.magnitude = d.contains("magnitude") ? d.at("magnitude").get<double>()
                                               : drag_for_authority_fraction(d.at("authority_fraction").get<double>(),
                                                                             s.vehicle);
      drag.epsilon = value_or(d, "epsilon", drag.epsilon);
      drag.horizontal_only = value_or(d, "horizontal_only", drag.horizontal_only);
      s.drag = drag;
    }
    if (j.contains("initial")) {
      const json& i = j.at("initial");
      if (i.contains("p") || i.contains("v") || i.contains("psi")) {
        ReducedStated x;
        if (i.contains("p")) x.p = vec3_from_json(i.at("p"), "initial.p");
        if (i.contains("v")) x.v = vec3_from_json(i.at("v"), "initial.v");
        x.psi = value_or(i, "psi", 0.0);
        s.initial.state = x;
      }
      s.initial.radial_offset = value_or(i, "radial_offset", 0.0);
      if (i.contains("position_offset"))
        s.initial.position_offset = vec3_from_json(i.at("position_offset"), "initial.position_offset");
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = s.name;
  j["mode"] = to_string(s.mode);
  j["maneuver"] = maneuver_to_json(s.maneuver);
  j["vehicle"] = vehicle_to_json(s.vehicle);
  j["gains"] = gains_to_json(s.gains);
  j["projection"] = projection_to_json(s.projection);
  j["duration"] = s.duration;
  j["plant_step"] = s.plant_step;
  j["control_divider"] = s.control_divider;
  j["end_on_completion"] = s.end_on_completion;
  j["seed"] = s.seed;
  if (s.hold) {
    j["hold"] = {{"position", s.hold->position ? vec3_to_json(*s.hold->position) : json(nullptr)},
                 {"start", s.hold->start},
                 {"release", s.hold->release},
                 {"freeze_integrator", s.hold->freeze_integrator}};
  } else {
    j["hold"] = nullptr;
  }
  if (s.drag) {
    j["drag"] = {{"magnitude", s.drag->magnitude},
                 {"epsilon", s.drag->epsilon},
                 {"horizontal_only", s.drag->horizontal_only}};
  } else {
    j["drag"] = nullptr;
  }
  json init = json::object();
  if (s.initial.state) {
    init["p"] = vec3_to_json(s.initial.state->p);
    init["v"] = vec3_to_json(s.initial.state->v);
    init["psi"] = s.initial.state->psi;
  }
  init["radial_offset"] = s.initial.radial_offset;
  init["position_offset"] = vec3_to_json(s.initial.position_offset);
  j["initial"] = init;
  return j;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("scenario " + path.string() + ": " + e.what());
  }
  return scenario_from_json(j, path.parent_path());
}

}  // namespace vtolreg
