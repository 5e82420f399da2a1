#pragma once

#include <Eigen/Dense>

namespace stratum {

// Deformation gradients live in dimension 2 or 3; the fixed upper bound keeps
// them on the stack while the runtime size follows the problem dimension.
inline constexpr int kMaxDim = 3;

template <typename Scalar>
using SquareMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::ColMajor, kMaxDim, kMaxDim>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

using Mat = SquareMatrix<double>;
using Vec = Vector<double>;

inline Vec unit_vector(int n, int i) {
  Vec e = Vec::Zero(n);
  e(i) = 1.0;
  return e;
}

}  // namespace stratum
