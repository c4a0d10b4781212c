#pragma once

// Dense linear-algebra kernel used by every other module.
//
// All routines are pure functions with fixed sign conventions so that the
// assignment pipeline is bit-reproducible:
//   * QR: diagonal of R is nonnegative.
//   * Symmetric eigensolver: eigenvalues descending, first nonzero component
//     of every eigenvector positive.
//   * Null-space bases are the trailing right singular vectors.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <utility>

#include "drschur/errors.hpp"

namespace drschur {

using Index = Eigen::Index;
using Complex = std::complex<double>;
using MatrixXd = Eigen::MatrixXd;
using VectorXd = Eigen::VectorXd;
using MatrixXcd = Eigen::MatrixXcd;
using VectorXcd = Eigen::VectorXcd;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

namespace linalg {

inline constexpr double kEps = std::numeric_limits<double>::epsilon();

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(std::abs(m(i, j)))) return false;
  return true;
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (!all_finite(m))
    throw InvalidInput(std::string(what) + ": non-finite entry");
}

// ---------------------------------------------------------------------------
// QR

struct QrResult {
  MatrixXd Q;  // rows x rows, orthogonal
  MatrixXd R;  // cols x cols, upper triangular, diag(R) >= 0
};

/// Full Householder QR of a tall (rows >= cols) matrix: M = Q [R; 0].
inline QrResult qr_decompose(const MatrixXd& M) {
  require_finite(M, "qr_decompose");
  if (M.rows() < M.cols())
    throw InvalidInput("qr_decompose: expected rows >= cols");
  const Index rows = M.rows();
  const Index cols = M.cols();
  QrResult out;
  if (rows == 0) {
    out.Q.resize(0, 0);
    out.R.resize(0, 0);
    return out;
  }
  Eigen::HouseholderQR<MatrixXd> qr(M);
  out.Q = qr.householderQ() * MatrixXd::Identity(rows, rows);
  out.R = qr.matrixQR().topRows(cols).template triangularView<Eigen::Upper>();
  for (Index i = 0; i < cols; ++i) {
    if (out.R(i, i) < 0.0) {
      out.R.row(i) *= -1.0;
      out.Q.col(i) *= -1.0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SVD

template <typename Scalar>
struct SvdResult {
  Mat<Scalar> U;    // rows x rows
  VectorXd sigma;   // min(rows, cols), descending
  Mat<Scalar> V;    // cols x cols
};

/// Full SVD, M = U * diag(sigma) * V^*.
template <typename Scalar>
SvdResult<Scalar> svd(const Mat<Scalar>& M) {
  require_finite(M, "svd");
  SvdResult<Scalar> out;
  const Index rows = M.rows();
  const Index cols = M.cols();
  if (rows == 0 || cols == 0) {
    out.U = Mat<Scalar>::Identity(rows, rows);
    out.V = Mat<Scalar>::Identity(cols, cols);
    out.sigma.resize(0);
    return out;
  }
  Eigen::BDCSVD<Mat<Scalar>> solver(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  out.U = solver.matrixU();
  out.V = solver.matrixV();
  out.sigma = solver.singularValues();
  return out;
}

// ---------------------------------------------------------------------------
// Rank

/// How a numerical rank is decided. With `absolute` unset the cutoff is
/// max(rows, cols) * eps * sigma_max.
struct RankPolicy {
  double absolute = -1.0;
  double relative = -1.0;  // cutoff = relative * sigma_max when >= 0

  static RankPolicy absolute_cutoff(double tol) { return {tol, -1.0}; }
  static RankPolicy relative_cutoff(double rel) { return {-1.0, rel}; }

  double cutoff(Index rows, Index cols, double sigma_max) const {
    if (absolute >= 0.0) return absolute;
    if (relative >= 0.0) return relative * sigma_max;
    return static_cast<double>(std::max(rows, cols)) * kEps * sigma_max;
  }
};

struct RankDecision {
  Index rank = 0;
  double tolerance = 0.0;
  VectorXd singular_values;  // descending
};

template <typename Scalar>
RankDecision numerical_rank(const Mat<Scalar>& M, RankPolicy policy = {}) {
  require_finite(M, "numerical_rank");
  RankDecision out;
  if (M.rows() == 0 || M.cols() == 0) {
    out.singular_values.resize(0);
    return out;
  }
  Eigen::BDCSVD<Mat<Scalar>> solver(M);
  out.singular_values = solver.singularValues();
  const double smax = out.singular_values(0);
  out.tolerance = policy.cutoff(M.rows(), M.cols(), smax);
  for (Index i = 0; i < out.singular_values.size(); ++i)
    if (out.singular_values(i) > out.tolerance) ++out.rank;
  return out;
}

inline RankDecision numerical_rank(const MatrixXd& M, RankPolicy policy = {}) {
  return numerical_rank<double>(M, policy);
}

// ---------------------------------------------------------------------------
// Null spaces

/// The trailing `dim` right singular vectors of M (orthonormal columns).
/// Used when the null-space dimension is known in advance.
template <typename Scalar>
Mat<Scalar> trailing_right_singular_vectors(const Mat<Scalar>& M, Index dim) {
  const auto s = svd<Scalar>(M);
  return s.V.rightCols(dim);
}

/// Orthonormal basis of N(M) from the trailing right singular vectors; the
/// column count is cols(M) - numerical_rank(M). Empty when N(M) = {0}.
template <typename Scalar>
Mat<Scalar> orthonormal_null_basis(const Mat<Scalar>& M, RankPolicy policy = {}) {
  require_finite(M, "orthonormal_null_basis");
  if (M.rows() == 0 || M.cols() == 0) return Mat<Scalar>::Identity(M.cols(), M.cols());
  const auto s = svd<Scalar>(M);
  const double smax = s.sigma.size() > 0 ? s.sigma(0) : 0.0;
  const double cut = policy.cutoff(M.rows(), M.cols(), smax);
  Index rank = 0;
  for (Index i = 0; i < s.sigma.size(); ++i)
    if (s.sigma(i) > cut) ++rank;
  return s.V.rightCols(M.cols() - rank);
}

inline MatrixXd orthonormal_null_basis(const MatrixXd& M, RankPolicy policy = {}) {
  return orthonormal_null_basis<double>(M, policy);
}

// ---------------------------------------------------------------------------
// Symmetric eigenproblem

struct SymEigResult {
  VectorXd values;   // descending
  MatrixXd vectors;  // orthonormal columns
};

/// Eigen-decomposition of a symmetric matrix. Inputs whose relative
/// asymmetry exceeds 1e-12 are rejected; smaller asymmetry is removed by
/// symmetrizing.
inline SymEigResult sym_eig(const MatrixXd& H) {
  require_finite(H, "sym_eig");
  if (H.rows() != H.cols()) throw InvalidInput("sym_eig: matrix is not square");
  const double scale = H.norm();
  if ((H - H.transpose()).norm() > 1e-12 * std::max(scale, 1e-300) && scale > 0.0)
    throw InvalidInput("sym_eig: matrix is not symmetric");
  SymEigResult out;
  const Index n = H.rows();
  if (n == 0) return out;
  const MatrixXd Hs = 0.5 * (H + H.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Hs);
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      if (out.vectors(i, j) != 0.0) {
        if (out.vectors(i, j) < 0.0) out.vectors.col(j) *= -1.0;
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Jacobi orthogonalization

struct Rotation {
  double c = 1.0;
  double s = 0.0;
};

/// Plane rotation (c, s) such that x~ = c x - s y and y~ = s x + c y are
/// orthogonal. The smallest such rotation (|theta| <= pi/4) is returned.
inline Rotation jacobi_orthogonalize(const VectorXd& x, const VectorXd& y) {
  if (x.size() != y.size()) throw InvalidInput("jacobi_orthogonalize: length mismatch");
  require_finite(x, "jacobi_orthogonalize");
  require_finite(y, "jacobi_orthogonalize");
  const double xx = x.squaredNorm();
  const double yy = y.squaredNorm();
  const double xy = x.dot(y);
  // sin^2 of the angle between x and y
  const double gram = xx * yy;
  if (gram == 0.0 || (gram - xy * xy) <= 1e-20 * gram)
    throw InvalidInput("jacobi_orthogonalize: vectors are linearly dependent");
  if (xy == 0.0) return {};
  const double a = xx - yy;
  double theta;
  if (a == 0.0)
    theta = xy > 0.0 ? -std::numbers::pi / 4.0 : std::numbers::pi / 4.0;
  else
    theta = 0.5 * std::atan(-2.0 * xy / a);
  return {std::cos(theta), std::sin(theta)};
}

// ---------------------------------------------------------------------------
// Misc

/// Frobenius condition number ||M||_F ||M^{-1}||_F from the singular values.
template <typename Scalar>
double condition_frobenius(const Mat<Scalar>& M) {
  if (M.rows() != M.cols()) throw InvalidInput("condition_frobenius: matrix is not square");
  const auto r = numerical_rank<Scalar>(M, RankPolicy::absolute_cutoff(0.0));
  const VectorXd& s = r.singular_values;
  if (s.size() == 0) return 0.0;
  if (s(s.size() - 1) <= static_cast<double>(M.rows()) * kEps * s(0))
    throw InvalidInput("condition_frobenius: matrix is numerically singular");
  return s.norm() * s.cwiseInverse().norm();
}

}  // namespace linalg
}  // namespace drschur
