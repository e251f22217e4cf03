#pragma once

// Closed-loop error matrix of the linearised model under the tracking gains,
// and the Lyapunov metric P solving A_c^T P + P A_c = -Q.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "vtolreg/errors.hpp"
#include "vtolreg/tracking_controller.hpp"

namespace vtolreg {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// State ordering: [p(3) v(3) psi] and, with integral action, [.. eta_p(3)].
template <typename Scalar>
struct LinearSystem {
  MatrixX<Scalar> A;
  MatrixX<Scalar> B;

  Eigen::Index states() const { return A.rows(); }
  Eigen::Index inputs() const { return B.cols(); }
};

template <typename Scalar>
struct ClosedLoop {
  LinearSystem<Scalar> system;
  MatrixX<Scalar> K;    // mu = K e
  MatrixX<Scalar> A_c;  // A + B K
  bool with_integral = false;
};

/// Double integrator per position axis plus a single integrator for yaw.
template <typename Scalar>
LinearSystem<Scalar> linearized_system(bool with_integral) {
  const Eigen::Index n = with_integral ? 10 : 7;
  LinearSystem<Scalar> sys{MatrixX<Scalar>::Zero(n, n), MatrixX<Scalar>::Zero(n, 4)};
  sys.A.template block<3, 3>(0, 3).setIdentity();
  sys.B.template block<3, 3>(3, 0).setIdentity();
  sys.B(6, 3) = Scalar(1);
  if (with_integral) sys.A.template block<3, 3>(7, 0).setIdentity();  // eta' = p~
  return sys;
}

template <typename Scalar>
ClosedLoop<Scalar> build_closed_loop(const Gains<Scalar>& gains, bool with_integral) {
  gains.validate();
  ClosedLoop<Scalar> loop;
  loop.system = linearized_system<Scalar>(with_integral);
  loop.with_integral = with_integral;
  const Eigen::Index n = loop.system.states();
  loop.K = MatrixX<Scalar>::Zero(4, n);
  loop.K.template block<3, 3>(0, 0).diagonal().setConstant(-gains.k_p);
  loop.K.template block<3, 3>(0, 3).diagonal().setConstant(-gains.k_d);
  loop.K(3, 6) = -gains.k_psi;
  if (with_integral) loop.K.template block<3, 3>(0, 7).diagonal().setConstant(-gains.k_i);
  loop.A_c = loop.system.A + loop.system.B * loop.K;
  return loop;
}

template <typename Scalar>
Scalar max_real_eigenvalue(const MatrixX<Scalar>& A) {
  Eigen::EigenSolver<MatrixX<Scalar>> solver(A, false);
  return solver.eigenvalues().real().maxCoeff();
}

template <typename Scalar>
VectorX<Scalar> symmetric_eigenvalues(const MatrixX<Scalar>& S) {
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(S, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

template <typename Scalar>
bool is_positive_definite(const MatrixX<Scalar>& S) {
  Eigen::LLT<MatrixX<Scalar>> llt(S);
  return llt.info() == Eigen::Success;
}

template <typename Scalar>
struct LyapunovSolution {
  MatrixX<Scalar> P;
  Scalar residual{0};  // ||A_c^T P + P A_c + Q||_F
  Scalar condition_estimate{0};
  bool ill_conditioned = false;
};

/// Solves A_c^T P + P A_c = -Q through the Kronecker form
/// (I (x) A_c^T + A_c^T (x) I) vec(P) = -vec(Q), then symmetrises.
template <typename Scalar>
LyapunovSolution<Scalar> solve_lyapunov(const MatrixX<Scalar>& A_c, const MatrixX<Scalar>& Q) {
  const Eigen::Index n = A_c.rows();
  if (A_c.cols() != n || Q.rows() != n || Q.cols() != n)
    throw ConfigError("solve_lyapunov: dimension mismatch");
  const Scalar hurwitz = max_real_eigenvalue<Scalar>(A_c);
  if (!(hurwitz < 0)) {
    throw NotHurwitzError("solve_lyapunov: closed loop is not Hurwitz (max Re(eig) = " +
                          std::to_string(double(hurwitz)) + ")");
  }
  if ((Q - Q.transpose()).norm() > Scalar(1e-12) * std::max(Scalar(1), Q.norm()) ||
      !is_positive_definite<Scalar>(Q)) {
    throw ConfigError("solve_lyapunov: Q must be symmetric positive definite");
  }

  const MatrixX<Scalar> At = A_c.transpose();
  MatrixX<Scalar> L = MatrixX<Scalar>::Zero(n * n, n * n);
  // Column-major vec: vec(At P) = (I (x) At) vec(P), vec(P A_c) = (A_c^T (x) I) vec(P).
  for (Eigen::Index j = 0; j < n; ++j) {
    L.block(j * n, j * n, n, n) += At;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (At(j, k) != Scalar(0)) L.block(j * n, k * n, n, n).diagonal().array() += At(j, k);
    }
  }
  const VectorX<Scalar> rhs = -Eigen::Map<const VectorX<Scalar>>(Q.data(), n * n);
  Eigen::PartialPivLU<MatrixX<Scalar>> lu(L);
  const VectorX<Scalar> vec_p = lu.solve(rhs);

  LyapunovSolution<Scalar> out;
  const MatrixX<Scalar> P = Eigen::Map<const MatrixX<Scalar>>(vec_p.data(), n, n);
  out.P = (P + P.transpose()) / Scalar(2);
  out.residual = (A_c.transpose() * out.P + out.P * A_c + Q).norm();
  const Scalar rcond = lu.rcond();
  out.condition_estimate = rcond > 0 ? Scalar(1) / rcond : std::numeric_limits<Scalar>::infinity();
  out.ill_conditioned = out.condition_estimate > Scalar(1e12);
  return out;
}

template <typename Scalar>
struct LyapunovCertificate {
  ClosedLoop<Scalar> loop;
  MatrixX<Scalar> Q;
  MatrixX<Scalar> P;
  Scalar residual{0};
  Scalar min_eig_P{0};
  Scalar min_eig_Q{0};
  Scalar max_real_eig_Ac{0};
  VectorX<Scalar> eig_P;
  VectorX<Scalar> eig_Q;
  Scalar condition_estimate{0};
  bool ill_conditioned = false;
  bool P_cholesky_ok = false;
  bool yaw_decoupled = false;  // P has no coupling between yaw and the rest

  bool passed() const {
    return P_cholesky_ok && min_eig_P > 0 && min_eig_Q > 0 && max_real_eig_Ac < 0 &&
           residual <= Scalar(1e-9) * std::max(Scalar(1), Q.norm()) && yaw_decoupled;
  }
};

/// Closed loop + Lyapunov solve + positive-definiteness checks. Q defaults
/// to the identity when empty.
template <typename Scalar>
LyapunovCertificate<Scalar> certify(const Gains<Scalar>& gains, bool with_integral,
                                    MatrixX<Scalar> Q = MatrixX<Scalar>()) {
  LyapunovCertificate<Scalar> cert;
  cert.loop = build_closed_loop(gains, with_integral);
  const Eigen::Index n = cert.loop.A_c.rows();
  if (Q.size() == 0) Q = MatrixX<Scalar>::Identity(n, n);
  const LyapunovSolution<Scalar> sol = solve_lyapunov<Scalar>(cert.loop.A_c, Q);
  cert.Q = Q;
  cert.P = sol.P;
  cert.residual = sol.residual;
  cert.condition_estimate = sol.condition_estimate;
  cert.ill_conditioned = sol.ill_conditioned;
  cert.eig_P = symmetric_eigenvalues<Scalar>(cert.P);
  cert.eig_Q = symmetric_eigenvalues<Scalar>(Q);
  cert.min_eig_P = cert.eig_P.minCoeff();
  cert.min_eig_Q = cert.eig_Q.minCoeff();
  cert.max_real_eig_Ac = max_real_eigenvalue<Scalar>(cert.loop.A_c);
  cert.P_cholesky_ok = is_positive_definite<Scalar>(cert.P);

  Scalar coupling{0};
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i != 6) coupling = std::max(coupling, std::abs(cert.P(6, i)));
  }
  // Only meaningful when Q itself does not couple yaw to the rest.
  Scalar q_coupling{0};
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i != 6) q_coupling = std::max(q_coupling, std::abs(Q(6, i)));
  }
  cert.yaw_decoupled = q_coupling > 0 || coupling <= Scalar(1e-12) * std::max(Scalar(1), cert.P.norm());
  return cert;
}

/// Per-axis Routh-Hurwitz test: s^2 + k_d s + k_p, or with integral action
/// s^3 + k_d s^2 + k_p s + k_i; yaw s + k_psi.
template <typename Scalar>
bool routh_stable(const Gains<Scalar>& gains, bool with_integral) {
  if (!(gains.k_psi > 0) || !(gains.k_d > 0) || !(gains.k_p > 0)) return false;
  if (!with_integral) return true;
  return gains.k_i > 0 && gains.k_d * gains.k_p > gains.k_i;
}

using LyapunovCertificated = LyapunovCertificate<double>;
using MatrixXd = MatrixX<double>;

}  // namespace vtolreg
