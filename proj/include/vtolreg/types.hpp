#pragma once

#include <Eigen/Dense>

namespace vtolreg {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

// z = [p; v; psi]
inline constexpr int kStateDim = 7;
inline constexpr int kInputDim = 4;

template <typename Scalar>
using StateVector = Eigen::Matrix<Scalar, kStateDim, 1>;

template <typename Scalar>
using StateMatrix = Eigen::Matrix<Scalar, kStateDim, kStateDim>;

using Vector3d = Vector3<double>;
using StateVectord = StateVector<double>;
using StateMatrixd = StateMatrix<double>;

}  // namespace vtolreg
