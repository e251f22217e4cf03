#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "vtolreg/vehicle_dynamics.hpp"

using namespace vtolreg;

namespace {

VehicleParamsd defaults() { return VehicleParamsd{}; }

ControlInputd hover_input(const VehicleParamsd& p) { return {p.mass * p.gravity, 0.0, 0.0, 0.0}; }

}  // namespace

TEST_CASE("hover input cancels gravity") {
  const VehicleParamsd p = defaults();
  ReducedStated x;
  x.p = {0.3, -0.2, -1.0};
  x.v = {0.1, 0.05, -0.02};
  x.psi = 0.7;
  const StateVectord dz = reduced_dynamics(x, hover_input(p), DisturbanceInputd{}, p);
  CHECK(dz.head<3>().isApprox(x.v));
  CHECK(dz.segment<3>(3).norm() < 1e-15);
  CHECK(dz(6) == 0.0);

  // f = 0.2943 N is exactly m g for m = 0.03, g = 9.81
  const ControlInputd u{0.2943, 0.0, 0.0, 0.0};
  const StateVectord dz0 = reduced_dynamics(ReducedStated{}, u, DisturbanceInputd{}, p);
  CHECK(std::abs(dz0(5)) < 1e-14);
}

TEST_CASE("acceleration matches a high-precision evaluation of the model") {
  // Frozen from a 40-digit evaluation of the thrust-direction formula.
  const VehicleParamsd p = defaults();
  ReducedStated x;
  x.psi = 0.3;
  const ControlInputd u{0.30, 0.1, -0.05, 0.0};
  const StateVectord dz = reduced_dynamics(x, u, DisturbanceInputd{}, p);
  CHECK(dz(3) == doctest::Approx(0.1800559643999736817).epsilon(1e-14));
  CHECK(dz(4) == doctest::Approx(1.1007057243681951334).epsilon(1e-14));
  CHECK(dz(5) == doctest::Approx(-0.12760669165504266649).epsilon(1e-13));
}

TEST_CASE("disturbance adds to the acceleration and yaw follows the rate command") {
  const VehicleParamsd p = defaults();
  DisturbanceInputd d;
  d.force = {0.5, -0.25, 0.1};
  ControlInputd u = hover_input(p);
  u.yaw_rate = 0.4;
  const StateVectord dz = reduced_dynamics(ReducedStated{}, u, d, p);
  CHECK((dz.segment<3>(3) - d.force).norm() < 1e-14);
  CHECK(dz(6) == 0.4);
}

TEST_CASE("singular attitude is rejected") {
  VehicleParamsd p = defaults();
  const ControlInputd u{0.3, M_PI / 2, 0.0, 0.0};
  CHECK_THROWS_AS(reduced_dynamics(ReducedStated{}, u, DisturbanceInputd{}, p), SingularAttitudeError);
  p.singularity_eps = 0.5;
  const ControlInputd tilted{0.3, 1.1, 0.0, 0.0};  // cos(1.1) = 0.45
  CHECK_THROWS_AS(reduced_dynamics(ReducedStated{}, tilted, DisturbanceInputd{}, p), SingularAttitudeError);
}

TEST_CASE("saturation clamps each channel and flags it") {
  const VehicleParamsd p = defaults();
  SUBCASE("thrust above f_max") {
    const auto s = saturate(ControlInputd{0.5, 0.0, 0.0, 0.0}, p);
    CHECK(s.input.thrust == 0.31);
    CHECK(s.flags.thrust);
    CHECK_FALSE(s.flags.roll);
  }
  SUBCASE("within limits is the identity") {
    const ControlInputd u{0.2, 0.1, -0.2, 0.3};
    const auto s = saturate(u, p);
    CHECK(s.input.thrust == u.thrust);
    CHECK(s.input.roll == u.roll);
    CHECK(s.input.pitch == u.pitch);
    CHECK(s.input.yaw_rate == u.yaw_rate);
    CHECK_FALSE(s.flags.any());
  }
  SUBCASE("symmetric roll clamp") {
    const auto s = saturate(ControlInputd{0.2, -1.2, 0.0, 0.0}, p);
    CHECK(s.input.roll == -0.6);
    CHECK(s.flags.roll);
  }
  SUBCASE("negative thrust") {
    const auto s = saturate(ControlInputd{-0.1, 0.0, 0.7, 0.0}, p);
    CHECK(s.input.thrust == 0.0);
    CHECK(s.input.pitch == 0.6);
    CHECK(s.flags.thrust);
    CHECK(s.flags.pitch);
  }
}

TEST_CASE("saturation is idempotent") {
  const VehicleParamsd p = defaults();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> thrust(-0.2, 0.8), angle(-1.4, 1.4);
  for (int i = 0; i < 500; ++i) {
    const ControlInputd u{thrust(rng), angle(rng), angle(rng), angle(rng)};
    const auto once = saturate(u, p);
    const auto twice = saturate(once.input, p);
    CHECK(twice.input.thrust == once.input.thrust);
    CHECK(twice.input.roll == once.input.roll);
    CHECK(twice.input.pitch == once.input.pitch);
    CHECK_FALSE(twice.flags.any());
  }
}

TEST_CASE("hover is a fixed point of the integrator") {
  const VehicleParamsd p = defaults();
  ReducedStated x;
  x.p = {0.25, 0.0, -1.0};
  x.psi = 0.2;
  for (double h : {1e-4, 0.002, 0.01, 0.5}) {
    const ReducedStated next = step(x, hover_input(p), DisturbanceInputd{}, h, p);
    CHECK((next.p - x.p).norm() < 1e-15);
    CHECK(next.v.norm() < 1e-15);
    CHECK(next.psi == x.psi);
  }
  ControlInputd spinning = hover_input(p);
  spinning.yaw_rate = 0.5;
  const ReducedStated turned = step(x, spinning, DisturbanceInputd{}, 0.01, p);
  CHECK(turned.psi == doctest::Approx(0.205).epsilon(1e-14));
  CHECK((turned.p - x.p).norm() < 1e-15);
}

TEST_CASE("free fall over one second is exact to 1e-10") {
  const VehicleParamsd p = defaults();
  ReducedStated x;
  const ControlInputd off{0.0, 0.0, 0.0, 0.0};
  for (int i = 0; i < 100; ++i) x = step(x, off, DisturbanceInputd{}, 0.01, p);
  CHECK(std::abs(x.p(2) - 4.905) < 1e-10);
  CHECK(std::abs(x.v(2) - 9.81) < 1e-10);
  CHECK(x.p.head<2>().norm() == 0.0);
}

TEST_CASE("RK4 local error is fifth order") {
  // Richardson-style oracle: one step of h against two steps of h/2 on a
  // tilted, yawing flight. For a 4th-order method the difference scales as
  // h^5, so halving h divides it by ~32.
  const VehicleParamsd p = defaults();
  ReducedStated x;
  x.p = {0.25, 0.0, -1.0};
  x.v = {0.0, 0.1, 0.0};
  const ControlInputd u{0.30, 0.2, -0.15, 0.8};
  DisturbanceInputd d;
  auto gap = [&](double h) {
    const ReducedStated one = step(x, u, d, h, p);
    const ReducedStated two = step(step(x, u, d, h / 2, p), u, d, h / 2, p);
    return (one.as_vector() - two.as_vector()).norm();
  };
  const double e1 = gap(0.2), e2 = gap(0.1), e3 = gap(0.05);
  CHECK(e1 / e2 > 25.0);
  CHECK(e1 / e2 < 40.0);
  CHECK(e2 / e3 > 25.0);
  CHECK(e2 / e3 < 40.0);
}

TEST_CASE("step is deterministic") {
  const VehicleParamsd p = defaults();
  ReducedStated x;
  x.v = {0.1, -0.3, 0.05};
  const ControlInputd u{0.28, 0.05, 0.12, -0.3};
  DisturbanceInputd d;
  d.force = {0.01, 0.02, 0.0};
  const ReducedStated a = step(x, u, d, 0.002, p);
  const ReducedStated b = step(x, u, d, 0.002, p);
  CHECK(std::memcmp(a.p.data(), b.p.data(), sizeof(double) * 3) == 0);
  CHECK(std::memcmp(a.v.data(), b.v.data(), sizeof(double) * 3) == 0);
  CHECK(a.psi == b.psi);
}

TEST_CASE("hold clamp applied after the step") {
  const VehicleParamsd p = defaults();
  ReducedStated x;
  x.p = {0.3, 0.1, -1.0};
  x.v = {0.5, 0.5, 0.0};
  DisturbanceInputd d;
  d.hold_active = true;
  d.hold_position = {0.25, 0.0, -1.0};
  ControlInputd u{0.31, 0.3, 0.0, 0.2};
  const ReducedStated next = step(x, u, d, 0.002, p);
  CHECK(next.p == d.hold_position);
  CHECK(next.v.isZero());
  CHECK(next.psi == doctest::Approx(0.0004));
}

TEST_CASE("first-order attitude lag") {
  VehicleParamsd p = defaults();
  LaggedState<double> x;
  const ControlInputd u{p.mass * p.gravity, 0.1, -0.1, 0.0};
  SUBCASE("ideal inner loop realises the command at once") {
    const auto next = step_lagged(x, u, DisturbanceInputd{}, 0.002, p);
    CHECK(next.roll == 0.1);
    CHECK(next.pitch == -0.1);
  }
  SUBCASE("lagged angles approach the command exponentially") {
    p.attitude_lag_tau = 0.05;
    LaggedState<double> s = x;
    for (int i = 0; i < 25; ++i) s = step_lagged(s, u, DisturbanceInputd{}, 0.002, p);  // t = tau
    CHECK(s.roll == doctest::Approx(0.1 * (1.0 - std::exp(-1.0))).epsilon(1e-8));
    CHECK(s.pitch == doctest::Approx(-0.1 * (1.0 - std::exp(-1.0))).epsilon(1e-8));
  }
}

TEST_CASE("parameter validation") {
  VehicleParamsd p;
  CHECK_NOTHROW(p.validate());
  p.angle_max = 1.6;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = VehicleParamsd{};
  p.mass = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = VehicleParamsd{};
  p.attitude_lag_tau = -1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("lateral authority") {
  const VehicleParamsd p;
  const double expected = 0.03 * std::sqrt((0.31 / 0.03) * (0.31 / 0.03) - 9.81 * 9.81);
  CHECK(lateral_authority(p) == doctest::Approx(expected));
  VehicleParamsd weak = p;
  weak.thrust_max = 0.2;
  CHECK(lateral_authority(weak) == 0.0);
}

TEST_CASE("templated scalar: long double evaluation agrees with double") {
  VehicleParams<long double> pl;
  ReducedState<long double> xl;
  xl.psi = 0.3L;
  const ControlInput<long double> ul{0.30L, 0.1L, -0.05L, 0.0L};
  const auto dz = reduced_dynamics(xl, ul, DisturbanceInput<long double>{}, pl);
  CHECK(static_cast<double>(dz(4)) == doctest::Approx(1.1007057243681951334).epsilon(1e-15));
}
