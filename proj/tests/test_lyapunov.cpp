#include <doctest.h>

#include <cmath>

#include "vtolreg/lyapunov.hpp"

using namespace vtolreg;

TEST_CASE("2x2 oracle") {
  // A = [[0, 1], [-1, -1]], Q = I. By hand: P = [[3/2, 1/2], [1/2, 1]].
  MatrixXd A(2, 2);
  A << 0.0, 1.0, -1.0, -1.0;
  const LyapunovSolution<double> sol = solve_lyapunov<double>(A, MatrixXd::Identity(2, 2));
  MatrixXd expected(2, 2);
  expected << 1.5, 0.5, 0.5, 1.0;
  CHECK((sol.P - expected).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(sol.residual < 1e-12);
  CHECK_FALSE(sol.ill_conditioned);
}

TEST_CASE("A = -I gives P = Q/2") {
  for (int n : {1, 3, 7, 10}) {
    const MatrixXd A = -MatrixXd::Identity(n, n);
    const LyapunovSolution<double> sol = solve_lyapunov<double>(A, MatrixXd::Identity(n, n));
    CHECK((sol.P - 0.5 * MatrixXd::Identity(n, n)).norm() < 1e-14);
  }
}

TEST_CASE("certificate for the default gains") {
  const Gainsd gains;
  const LyapunovCertificated cert = certify(gains, false);
  CHECK(cert.P.rows() == 7);
  CHECK(cert.residual < 1e-9);
  CHECK(cert.P_cholesky_ok);
  CHECK(cert.min_eig_P > 0.0);
  CHECK(cert.passed());
  CHECK((cert.P - cert.P.transpose()).norm() == 0.0);

  SUBCASE("per-axis block matches the closed form") {
    // s^2 + k_d s + k_p with Q = I:
    // p_pv = 1/(2 k_p), p_vv = (1 + 2 p_pv)/(2 k_d), p_pp = k_d p_pv + k_p p_vv
    const double p_pv = 1.0 / (2.0 * gains.k_p);
    const double p_vv = (1.0 + 2.0 * p_pv) / (2.0 * gains.k_d);
    const double p_pp = gains.k_d * p_pv + gains.k_p * p_vv;
    for (int i = 0; i < 3; ++i) {
      CHECK(cert.P(i, i) == doctest::Approx(p_pp).epsilon(1e-12));
      CHECK(cert.P(i, i + 3) == doctest::Approx(p_pv).epsilon(1e-12));
      CHECK(cert.P(i + 3, i + 3) == doctest::Approx(p_vv).epsilon(1e-12));
    }
    CHECK(cert.P(6, 6) == doctest::Approx(1.0 / (2.0 * gains.k_psi)).epsilon(1e-12));
    CHECK(p_pp == 1.3125);
  }
  SUBCASE("yaw block is decoupled") {
    CHECK(cert.yaw_decoupled);
    for (int i = 0; i < 6; ++i) CHECK(cert.P(6, i) == 0.0);
  }
  SUBCASE("closed-loop spectrum") {
    // double pole of s^2 + 8 s + 16 at -4 on each axis, yaw at -k_psi
    const Eigen::EigenSolver<MatrixXd> es(cert.loop.A_c, false);
    const auto eig = es.eigenvalues();
    int yaw_hits = 0;
    for (Eigen::Index i = 0; i < eig.size(); ++i) {
      if (std::abs(eig(i) - std::complex<double>(-gains.k_psi, 0.0)) < 1e-9) ++yaw_hits;
      CHECK(eig(i).real() < 0.0);
    }
    CHECK(yaw_hits == 1);
  }
}

TEST_CASE("certificate with integral action") {
  Gainsd gains;
  gains.k_i = 2.0;
  const LyapunovCertificated cert = certify(gains, true);
  CHECK(cert.P.rows() == 10);
  CHECK(cert.residual < 1e-9);
  CHECK(cert.P_cholesky_ok);
  CHECK(cert.passed());
}

TEST_CASE("custom Q") {
  const Gainsd gains;
  MatrixXd Q = MatrixXd::Identity(7, 7);
  Q.diagonal() << 10.0, 10.0, 10.0, 1.0, 1.0, 1.0, 0.5;
  const LyapunovCertificated cert = certify(gains, false, Q);
  CHECK(cert.passed());
  CHECK((cert.loop.A_c.transpose() * cert.P + cert.P * cert.loop.A_c + Q).norm() < 1e-9);
}

TEST_CASE("Routh test agrees with the eigenvalues") {
  const double kps[] = {0.5, 2.0, 16.0};
  const double kds[] = {0.3, 1.0, 8.0};
  const double kis[] = {0.1, 1.0, 5.0, 50.0};
  int unstable = 0;
  for (double kp : kps) {
    for (double kd : kds) {
      for (double ki : kis) {
        Gainsd g;
        g.k_p = kp;
        g.k_d = kd;
        g.k_i = ki;
        const ClosedLoop<double> loop = build_closed_loop(g, true);
        const bool hurwitz = max_real_eigenvalue<double>(loop.A_c) < 0.0;
        CHECK(hurwitz == routh_stable(g, true));
        if (!hurwitz) {
          ++unstable;
          CHECK_THROWS_AS(certify(g, true), NotHurwitzError);
        }
      }
    }
  }
  CHECK(unstable > 0);
}

TEST_CASE("integral action needs k_i > 0") {
  const Gainsd gains;  // default k_i = 0 leaves a pole at the origin
  CHECK_FALSE(routh_stable(gains, true));
  CHECK_THROWS_AS(certify(gains, true), NotHurwitzError);
}

TEST_CASE("invalid inputs") {
  Gainsd g;
  g.k_p = 0.0;
  CHECK_THROWS_AS(certify(g, false), ConfigError);

  MatrixXd A(2, 2);
  A << 0.0, 1.0, 1.0, 0.0;  // saddle
  CHECK_THROWS_AS(solve_lyapunov<double>(A, MatrixXd::Identity(2, 2)), NotHurwitzError);

  const MatrixXd stable = -MatrixXd::Identity(2, 2);
  MatrixXd bad_q(2, 2);
  bad_q << 1.0, 2.0, 2.0, 1.0;  // indefinite
  CHECK_THROWS_AS(solve_lyapunov<double>(stable, bad_q), ConfigError);
  CHECK_THROWS_AS(solve_lyapunov<double>(stable, MatrixXd::Identity(3, 3)), ConfigError);
}

TEST_CASE("templated scalar: long double certificate") {
  Gains<long double> g;
  const LyapunovCertificate<long double> cert = certify(g, false);
  CHECK(cert.passed());
  CHECK(static_cast<double>(cert.P(0, 0)) == doctest::Approx(1.3125).epsilon(1e-15));
}
