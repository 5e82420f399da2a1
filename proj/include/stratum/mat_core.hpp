#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include <Eigen/SVD>

#include "stratum/types.hpp"

namespace stratum {

/// A matrix validated to lie in SO(n): orthonormal columns and unit determinant.
template <typename Scalar>
class RotationMatrix {
 public:
  static constexpr double kTolerance = 1e-10;

  template <typename Derived>
  explicit RotationMatrix(const Eigen::MatrixBase<Derived>& m) : m_(m) {
    if (m_.rows() != m_.cols() || m_.rows() < 2 || m_.rows() > kMaxDim)
      throw std::invalid_argument("rotation must be square of size 2 or 3");
    const auto n = m_.rows();
    const Scalar orth = (m_.transpose() * m_ - SquareMatrix<Scalar>::Identity(n, n)).norm();
    if (!(orth <= Scalar(kTolerance)) || !(std::abs(m_.determinant() - Scalar(1)) <= Scalar(kTolerance)))
      throw std::invalid_argument("matrix is not in SO(n)");
  }

  static RotationMatrix identity(int n) { return RotationMatrix(SquareMatrix<Scalar>::Identity(n, n)); }

  const SquareMatrix<Scalar>& matrix() const { return m_; }
  operator const SquareMatrix<Scalar>&() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }

 private:
  SquareMatrix<Scalar> m_;
};

using Rotation = RotationMatrix<double>;

/// a^perp = (-a_n, a_2, ..., a_{n-1}, a_1).
template <typename Derived>
Vector<typename Derived::Scalar> perp(const Eigen::MatrixBase<Derived>& a) {
  const auto n = a.size();
  Vector<typename Derived::Scalar> r = a;
  r(0) = -a(n - 1);
  r(n - 1) = a(0);
  return r;
}

// Singular values with the smallest one sign-flipped for orientation-reversing F.
template <typename Derived>
Vector<typename Derived::Scalar> signed_singular_values(const Eigen::MatrixBase<Derived>& F) {
  using Scalar = typename Derived::Scalar;
  Eigen::JacobiSVD<SquareMatrix<Scalar>> svd(F.eval());
  Vector<Scalar> s = svd.singularValues();
  if (F.determinant() < Scalar(0)) s(s.size() - 1) = -s(s.size() - 1);
  return s;
}

/// Frobenius distance from F to SO(n).
template <typename Derived>
typename Derived::Scalar dist_so(const Eigen::MatrixBase<Derived>& F) {
  using Scalar = typename Derived::Scalar;
  const auto s = signed_singular_values(F);
  return (s.array() - Scalar(1)).matrix().norm();
}

template <typename Scalar>
struct ProcrustesResult {
  RotationMatrix<Scalar> rotation;
  bool degenerate;
};

/// Nearest rotation to G. The flag marks a non-unique minimizer, in which case
/// the rotation built from the SVD factors is returned unchanged.
template <typename Derived>
ProcrustesResult<typename Derived::Scalar> procrustes_rotation(const Eigen::MatrixBase<Derived>& G) {
  using Scalar = typename Derived::Scalar;
  using M = SquareMatrix<Scalar>;
  const auto n = G.rows();
  Eigen::JacobiSVD<M> svd(G.eval(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  const M& U = svd.matrixU();
  const M& V = svd.matrixV();
  const Scalar sign = (U * V.transpose()).determinant() < Scalar(0) ? Scalar(-1) : Scalar(1);
  Vector<Scalar> diag = Vector<Scalar>::Ones(n);
  diag(n - 1) = sign;
  M R = U * diag.asDiagonal() * V.transpose();
  const auto& s = svd.singularValues();
  const Scalar gap = s(n - 2) + sign * s(n - 1);
  const bool degenerate = gap <= Scalar(1e-12) * std::max(Scalar(1), s(0));
  return {RotationMatrix<Scalar>(R), degenerate};
}

template <typename Scalar>
using MinorsVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, Eigen::ColMajor, 19, 1>;

namespace detail {

// Index subsets of {0..n-1} of size k, in lexicographic order.
inline int subsets(int n, int k, int out[][3]) {
  int count = 0;
  int idx[3] = {0, 1, 2};
  for (;;) {
    for (int j = 0; j < k; ++j) out[count][j] = idx[j];
    ++count;
    int j = k - 1;
    while (j >= 0 && idx[j] == n - k + j) --j;
    if (j < 0) break;
    ++idx[j];
    for (int l = j + 1; l < k; ++l) idx[l] = idx[l - 1] + 1;
  }
  return count;
}

}  // namespace detail

/// All k x k minors for k = 1..n: entries row-major, then 2 x 2 minors with
/// row subsets outer and column subsets inner (both lexicographic), ..., det.
template <typename Derived>
MinorsVector<typename Derived::Scalar> minors(const Eigen::MatrixBase<Derived>& F) {
  using Scalar = typename Derived::Scalar;
  const int n = static_cast<int>(F.rows());
  int total = 0;
  int sets[3][3][3];
  int counts[4] = {0, 0, 0, 0};
  for (int k = 1; k <= n; ++k) {
    counts[k] = detail::subsets(n, k, sets[k - 1]);
    total += counts[k] * counts[k];
  }
  MinorsVector<Scalar> out(total);
  int pos = 0;
  for (int k = 1; k <= n; ++k) {
    for (int r = 0; r < counts[k]; ++r) {
      for (int c = 0; c < counts[k]; ++c) {
        SquareMatrix<Scalar> sub(k, k);
        for (int a = 0; a < k; ++a)
          for (int b = 0; b < k; ++b) sub(a, b) = F(sets[k - 1][r][a], sets[k - 1][c][b]);
        out(pos++) = sub.determinant();
      }
    }
  }
  return out;
}

/// F = R_F + d_F (x) e_n.
template <typename Scalar>
struct ADecomposition {
  RotationMatrix<Scalar> rotation;
  Vector<Scalar> shear;

  SquareMatrix<Scalar> reconstruct() const {
    const auto n = shear.size();
    SquareMatrix<Scalar> F = rotation.matrix();
    F.col(n - 1) += shear;
    return F;
  }
};

inline constexpr double kDefaultATolerance = 1e-8;

/// Splits F into a rotation and a shear along e_n when its first n-1 columns
/// are orthonormal within tol. Those columns are re-orthonormalized (a no-op
/// at round-off level for exact inputs) so that the rotation validates.
template <typename Derived>
std::optional<ADecomposition<typename Derived::Scalar>> decompose_a(const Eigen::MatrixBase<Derived>& F,
                                                                    double tol = kDefaultATolerance) {
  using Scalar = typename Derived::Scalar;
  if (!(tol > 0)) throw std::invalid_argument("decompose_a: tol must be positive");
  const auto n = F.rows();
  for (int i = 0; i < n - 1; ++i) {
    for (int j = 0; j <= i; ++j) {
      const Scalar dot = F.col(i).dot(F.col(j));
      if (!(std::abs(dot - (i == j ? Scalar(1) : Scalar(0))) <= Scalar(tol))) return std::nullopt;
    }
  }
  SquareMatrix<Scalar> R(n, n);
  for (int i = 0; i < n - 1; ++i) {
    Vector<Scalar> c = F.col(i);
    for (int j = 0; j < i; ++j) c -= R.col(j).dot(c) * R.col(j);
    R.col(i) = c / c.norm();
  }
  if (n == 2) {
    R(0, 1) = -R(1, 0);
    R(1, 1) = R(0, 0);
  } else {
    R.col(2) = R.col(0).template head<3>().cross(R.col(1).template head<3>());
  }
  Vector<Scalar> d = F.col(n - 1) - R.col(n - 1);
  return ADecomposition<Scalar>{RotationMatrix<Scalar>(R), d};
}

/// F_lambda = R_F + (1/lambda) d_F (x) e_n.
template <typename Scalar>
SquareMatrix<Scalar> f_lambda(const ADecomposition<Scalar>& dec, Scalar lambda) {
  const auto n = dec.shear.size();
  SquareMatrix<Scalar> out = dec.rotation.matrix();
  out.col(n - 1) += dec.shear / lambda;
  return out;
}

template <typename Derived>
SquareMatrix<typename Derived::Scalar> f_lambda(const Eigen::MatrixBase<Derived>& F,
                                               typename Derived::Scalar lambda) {
  if (!(lambda > 0 && lambda <= 1)) throw std::invalid_argument("f_lambda: lambda must lie in (0,1]");
  const auto dec = decompose_a(F);
  if (!dec) throw std::domain_error("f_lambda: matrix is not in the admissible set");
  return f_lambda(*dec, lambda);
}

/// Planar rotation by angle theta in the (e_1, e_n) plane, fixing e_2..e_{n-1}.
inline Rotation planar_rotation(int n, double theta) {
  Mat R = Mat::Identity(n, n);
  R(0, 0) = std::cos(theta);
  R(n - 1, 0) = std::sin(theta);
  R(0, n - 1) = -std::sin(theta);
  R(n - 1, n - 1) = std::cos(theta);
  return Rotation(R);
}

}  // namespace stratum
