#include <doctest.h>

#include <cmath>

#include "vtolreg/maneuver.hpp"

using namespace vtolreg;

TEST_CASE("circle starts at center + radius on the first axis") {
  const Maneuver m = circle(0.25, 0.1, Vector3d(0.0, 0.0, -1.0));
  const ReferencePoint r0 = m.eval(0.0);
  CHECK((r0.position - Vector3d(0.25, 0.0, -1.0)).norm() < 1e-15);
  CHECK(m.closed());
  CHECK(m.period() == doctest::Approx(2.0 * M_PI * 0.25 / 0.1));
  CHECK(m.kind() == "circle");
}

TEST_CASE("circle speed, centripetal acceleration and periodicity") {
  const Maneuver m = circle(0.25, 0.1, Vector3d(0.0, 0.0, -1.0));
  for (long k = 0; k < m.intervals(); ++k) {
    const double tau = m.node_tau(k);
    const ReferencePoint r = m.eval(tau);
    CHECK(std::abs(r.velocity.norm() - 0.1) < 1e-12);
    CHECK(std::abs(r.acceleration.norm() - 0.04) < 1e-12);
    const ReferencePoint later = m.eval(tau + m.period());
    CHECK((later.state() - r.state()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("sampled table matches eval at the grid nodes") {
  const Maneuver m = circle(0.25, 0.1, Vector3d(0.0, 0.0, -1.0));
  for (long k = 0; k < m.intervals(); k += 37) CHECK(m.node_state(k) == m.state(m.node_tau(k)));
  // wrap-around of node indices on a closed curve
  CHECK(m.node_state(-1) == m.node_state(m.intervals() - 1));
  CHECK(m.node_state(m.intervals()) == m.node_state(0));
  // the grid divides the period exactly
  CHECK(m.grid_step() <= kDefaultGridStep);
  CHECK(m.grid_step() * static_cast<double>(m.intervals()) == doctest::Approx(m.period()).epsilon(1e-14));
}

TEST_CASE("turn90 geometry") {
  const double speed = 0.2, leg = 0.5, radius = 0.2;
  const Vector3d start(0.5, 0.0, -1.0);
  const Maneuver m = turn90(speed, leg, radius, start);
  CHECK_FALSE(m.closed());
  CHECK(m.tau_max() == doctest::Approx((2.0 * leg + 0.5 * M_PI * radius) / speed).epsilon(1e-14));

  const ReferencePoint r0 = m.eval(0.0);
  CHECK((r0.position - start).norm() < 1e-15);
  CHECK(r0.acceleration.isZero());

  SUBCASE("constant speed everywhere") {
    for (long k = 0; k <= m.intervals(); ++k) {
      CHECK(std::abs(m.eval(m.node_tau(k)).velocity.norm() - speed) < 1e-12);
    }
  }
  SUBCASE("acceleration is zero on the legs and v^2/R on the arc") {
    const double t1 = leg / speed;
    CHECK(m.eval(0.5 * t1).acceleration.isZero());
    const double mid_arc = t1 + 0.25 * M_PI * radius / speed;
    CHECK(m.eval(mid_arc).acceleration.norm() == doctest::Approx(speed * speed / radius).epsilon(1e-12));
    CHECK(m.eval(m.tau_max() - 0.1).acceleration.isZero());
  }
  SUBCASE("position is continuous at the junctions and the heading turns by 90 degrees") {
    for (double knot : m.knots()) {
      const double gap = (m.eval(knot + 1e-9).position - m.eval(knot - 1e-9).position).norm();
      CHECK(gap < 1e-9);
    }
    const Vector3d exit_velocity = m.eval(m.tau_max()).velocity;
    CHECK(std::abs(exit_velocity.dot(r0.velocity)) < 1e-12);
    CHECK(exit_velocity(1) > 0.0);  // left turn
    const Vector3d end = m.eval(m.tau_max()).position;
    CHECK((end - Vector3d(0.5 + leg + radius, radius + leg, -1.0)).norm() < 1e-12);
  }
  SUBCASE("evaluation outside the domain clamps") {
    CHECK(m.eval(-3.0).position == m.eval(0.0).position);
    CHECK(m.eval(m.tau_max() + 3.0).position == m.eval(m.tau_max()).position);
  }
}

TEST_CASE("derivative validation") {
  SUBCASE("circle passes with dt = 1e-4") {
    const Maneuver m = circle(0.25, 0.1, Vector3d(0.0, 0.0, -1.0));
    const DerivativeReport report = validate_derivatives(m, 1e-4, 1e-6);
    CHECK(report.max_deviation < 1e-6);
  }
  SUBCASE("turn90 passes away from its knots") {
    const Maneuver m = turn90(0.2, 0.5, 0.2, Vector3d(0.5, 0.0, -1.0));
    CHECK(validate_derivatives(m, 1e-4, 1e-6).max_deviation < 1e-6);
  }
  SUBCASE("hover has zero deviation") {
    const Maneuver m = hover(Vector3d(0.0, 0.0, -1.0), 5.0);
    CHECK(validate_derivatives(m, 1e-4, 1e-12).max_deviation == 0.0);
  }
  SUBCASE("corrupted velocity is caught") {
    const Maneuver good = circle(0.25, 0.1, Vector3d(0.0, 0.0, -1.0));
    const Maneuver bad("corrupted", {0.0, good.period(), true},
                       [&good](double tau) {
                         ReferencePoint r = good.eval(tau);
                         r.velocity *= 2.0;
                         return r;
                       },
                       kDefaultGridStep);
    CHECK_THROWS_AS(validate_derivatives(bad, 1e-4, 1e-6), InconsistentDerivativeError);
  }
}

TEST_CASE("nominal input") {
  const VehicleParamsd params;
  SUBCASE("hover reference") {
    ReferencePoint ref;
    ref.position = {0.0, 0.0, -1.0};
    const ControlInputd u = nominal_input(ref, params);
    CHECK(u.thrust == doctest::Approx(params.mass * params.gravity).epsilon(1e-15));
    CHECK(u.roll == 0.0);
    CHECK(u.pitch == 0.0);
    CHECK(u.yaw_rate == 0.0);
  }
  SUBCASE("circle r = 0.25, v = 0.1 at tau = 0") {
    // Frozen from a 40-digit evaluation of the inversion with mu = (-0.04, 0, 0).
    const Maneuver m = circle(0.25, 0.1, Vector3d(0.0, 0.0, -1.0));
    const ControlInputd u = nominal_input(m.eval(0.0), params);
    CHECK(u.thrust == doctest::Approx(0.29430244647301184132).epsilon(1e-14));
    CHECK(std::abs(u.roll) < 1e-15);
    CHECK(u.pitch == doctest::Approx(0.0040774493705582101913).epsilon(1e-12));
    // tilt towards the centre; thrust equals m g to four digits
    CHECK(u.thrust == doctest::Approx(0.2943).epsilon(1e-4));
    const ControlInputd quarter = nominal_input(m.eval(m.period() / 4.0), params);
    CHECK(quarter.roll == doctest::Approx(-0.0040774493705582101913).epsilon(1e-10));
  }
  SUBCASE("upward reference acceleration at g is singular") {
    ReferencePoint ref;
    ref.acceleration = {0.0, 0.0, params.gravity};
    CHECK_THROWS_AS(nominal_input(ref, params), SingularAttitudeError);
  }
}

TEST_CASE("nominal input closes the loop through the dynamics") {
  const VehicleParamsd params;
  const Maneuver maneuvers[] = {circle(0.25, 0.1, Vector3d(0.0, 0.0, -1.0)),
                                turn90(0.2, 0.5, 0.2, Vector3d(0.5, 0.0, -1.0)),
                                circle(0.4, 0.6, Vector3d(1.0, -1.0, -2.0), 0.7)};
  for (const Maneuver& m : maneuvers) {
    const long nodes = m.closed() ? m.intervals() : m.intervals() + 1;
    double worst = 0.0;
    for (long k = 0; k < nodes; ++k) {
      const ReferencePoint ref = m.eval(m.node_tau(k));
      const ControlInputd u = nominal_input(ref, params);
      const StateVectord dz =
          reduced_dynamics(ReducedStated::from_vector(ref.state()), u, DisturbanceInputd{}, params);
      worst = std::max(worst, (dz - ref.state_rate()).cwiseAbs().maxCoeff());
    }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("path distance") {
  const Maneuver m = circle(0.25, 0.1, Vector3d(0.0, 0.0, -1.0));
  CHECK(m.path_distance(Vector3d(0.25, 0.0, -1.0)) < 1e-12);
  CHECK(m.path_distance(Vector3d(0.35, 0.0, -1.0)) == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(m.path_distance(Vector3d(0.0, 0.0, -1.0)) == doctest::Approx(0.25).epsilon(1e-3));
}

TEST_CASE("invalid maneuver parameters") {
  CHECK_THROWS_AS(circle(0.0, 0.1, Vector3d::Zero()), ConfigError);
  CHECK_THROWS_AS(circle(0.25, -0.1, Vector3d::Zero()), ConfigError);
  CHECK_THROWS_AS(turn90(0.2, 0.0, 0.2, Vector3d::Zero()), ConfigError);
  CHECK_THROWS_AS(hover(Vector3d::Zero(), 0.0), ConfigError);
}
