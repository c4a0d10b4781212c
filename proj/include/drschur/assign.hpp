#pragma once

// Incremental Schur-form construction of PD state feedback.
//
// With B = Q1 R and Q2 the orthogonal complement of range(B), the feedback
// (F, G) places the requested spectrum iff there are an orthogonal P, an
// invertible X and upper quasi-triangular S, T with
//
//     Q2' A P = Xi S,   Q2' E P = Xi T,   Xi = Q2' X.
//
// Columns of P, Xi, S, T are produced one block at a time (1x1 for real or
// infinite poles, 2x2 for conjugate pairs), each time solving a small
// optimization over the null space of a stacked constraint matrix. The free
// choice at each step minimizes the off-diagonal mass of (S, T), which is
// the departure-from-normality measure reported by metrics.hpp.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "drschur/errors.hpp"
#include "drschur/linalg.hpp"
#include "drschur/pole.hpp"
#include "drschur/problem.hpp"

namespace drschur {

// ---------------------------------------------------------------------------
// Types

struct Parametrization {
  MatrixXd Q1;  // n x m
  MatrixXd Q2;  // n x (n - m)
  MatrixXd R;   // m x m, upper triangular, positive diagonal
};

enum class BlockKind { Infinite, Real, ComplexAlphaDominant, ComplexBetaDominant };

struct BlockDescriptor {
  Index start = 0;
  int size = 1;
  BlockKind kind = BlockKind::Infinite;
  double delta = 1.0;  // 2x2 only
  double sigma = 0.0;  // 2x2 only
  double tau = 0.0;    // 2x2 only
  double eps1 = 1.0;   // 1x1 only: diagonal of S
  double eps2 = 0.0;   // 1x1 only: diagonal of T
};

struct AssignState {
  MatrixXd P;   // n x j
  MatrixXd Xi;  // (n - m) x j
  MatrixXd S;   // j x j
  MatrixXd T;   // j x j
  std::vector<BlockDescriptor> blocks;

  Index j() const { return P.cols(); }

  static AssignState empty(Index n, Index m) {
    AssignState st;
    st.P.resize(n, 0);
    st.Xi.resize(n - m, 0);
    st.S.resize(0, 0);
    st.T.resize(0, 0);
    return st;
  }
};

struct Solution {
  MatrixXd F, G;  // m x n
  MatrixXd P;     // n x n orthogonal
  MatrixXd S, T;  // n x n quasi-triangular
  MatrixXd X;     // n x n
  std::vector<BlockDescriptor> blocks;
};

enum class Order { InfFirst, FinFirst };

// ---------------------------------------------------------------------------
// Diagnostics recorded per step (optional, used by tests and reports)

enum class StepBranch {
  Infinite,         // whole infinite block
  Real,             // real pole, or infinite pole in FinFirst mode
  RealInitial,      // first column with no previous columns
  ComplexRankOne,   // rank(Z1) = 1
  ComplexJacobi,    // rank(Z1) >= 2, strategy 1 chosen
  ComplexIsotropic  // rank(Z1) >= 2, strategy 2 chosen
};

struct StepRecord {
  Index block = 0;
  StepBranch branch = StepBranch::Real;
  Index null_dim = 0;           // dimension of the computed null space
  Index expected_null_dim = 0;  // value predicted by the theory
  double top_singular = 0.0;    // largest singular value of Z1

  // Real steps.
  MatrixXd Z1;
  VectorXd u;
  MatrixXd VS;  // v_S columns added (j x size)

  // Complex steps.
  MatrixXcd Z1c;
  MatrixXcd Z34c;
  VectorXd nu;
  double rho1 = std::numeric_limits<double>::infinity();
  double rho2 = std::numeric_limits<double>::infinity();
  double objective = 0.0;
  double tau = 0.0;
  double delta = 1.0;

  // Rank-one branch: objective q(f) = f'Hf + h'f + zeta.
  MatrixXd H;
  VectorXd h;
  double zeta = 0.0;
  VectorXd f;
  MatrixXcd V;     // right singular vectors of Z1
  linalg::Rotation rot;    // Jacobi rotation on psi_1
  double sig1 = 0.0, sig2 = 0.0;
};

struct AssignTrace {
  std::vector<StepRecord> steps;
};

struct AssignOptions {
  Order order = Order::InfFirst;
  /// Relative cutoff for the full-row-rank checks on the constraint matrices.
  double rank_rtol = 1e-12;
  /// Z1 is treated as zero when its largest singular value is below this.
  double degenerate_tol = 1e-12;
  /// nu_2 <= rank_one_ratio * nu_1 selects the rank-one branch.
  double rank_one_ratio = 1e-8;
  /// Accept row-rank-deficient constraint matrices and use the null space of
  /// their numerical rank. The pipeline sets this for FinFirst, where the
  /// equations for the trailing infinite poles are generically redundant.
  bool allow_rank_deficient = false;
  AssignTrace* trace = nullptr;
};

// ---------------------------------------------------------------------------
// Parametrization

inline Parametrization compute_parametrization(const MatrixXd& B) {
  linalg::require_finite(B, "compute_parametrization");
  const Index n = B.rows();
  const Index m = B.cols();
  if (m == 0 || m > n) throw InvalidInput("compute_parametrization: B must be n x m with 1 <= m <= n");
  if (linalg::numerical_rank(B).rank != m)
    throw InvalidInput("compute_parametrization: B does not have full column rank");
  const auto qr = linalg::qr_decompose(B);
  return {qr.Q.leftCols(m), qr.Q.rightCols(n - m), qr.R};
}

// ---------------------------------------------------------------------------
// Step helpers

namespace assign_detail {

inline void check_full_row_rank(const VectorXd& sigma, Index rows, double rtol, int block, const char* what) {
  if (rows == 0) return;
  const double smax = sigma.size() > 0 ? sigma(0) : 0.0;
  if (sigma.size() < rows || smax == 0.0 || sigma(rows - 1) <= rtol * smax)
    throw AssignmentError(block, std::string(what) + " is not of full row rank");
}

/// Dimension of the null space used by a step, after the rank checks.
inline Index constraint_null_dim(const VectorXd& sigma, Index rows, Index cols, Index expected,
                                 const AssignOptions& opts, int block) {
  if (!opts.allow_rank_deficient) {
    check_full_row_rank(sigma, rows, opts.rank_rtol, block, "constraint matrix M_j");
    if (cols - rows != expected)
      throw AssignmentError(block, "null space has dimension " + std::to_string(cols - rows) + ", expected " +
                                       std::to_string(expected));
    return cols - rows;
  }
  const double smax = sigma.size() > 0 ? sigma(0) : 0.0;
  Index rank = 0;
  while (rank < sigma.size() && sigma(rank) > opts.rank_rtol * smax) ++rank;
  const Index null_dim = cols - rank;
  if (null_dim < expected)
    throw AssignmentError(block, "null space has dimension " + std::to_string(null_dim) + ", expected at least " +
                                     std::to_string(expected));
  return null_dim;
}

/// Append `k` columns/blocks to the state.
inline void append(AssignState& st, const MatrixXd& p, const MatrixXd& xi, const MatrixXd& vS, const MatrixXd& vT,
                   const MatrixXd& Sd, const MatrixXd& Td) {
  const Index j = st.j();
  const Index k = p.cols();
  st.P.conservativeResize(Eigen::NoChange, j + k);
  st.P.rightCols(k) = p;
  st.Xi.conservativeResize(Eigen::NoChange, j + k);
  st.Xi.rightCols(k) = xi;
  MatrixXd S = MatrixXd::Zero(j + k, j + k);
  MatrixXd T = MatrixXd::Zero(j + k, j + k);
  S.topLeftCorner(j, j) = st.S;
  T.topLeftCorner(j, j) = st.T;
  S.topRightCorner(j, k) = vS;
  T.topRightCorner(j, k) = vT;
  S.bottomRightCorner(k, k) = Sd;
  T.bottomRightCorner(k, k) = Td;
  st.S = std::move(S);
  st.T = std::move(T);
}

inline int next_block_index(const AssignState& st) { return static_cast<int>(st.blocks.size()); }

}  // namespace assign_detail

// ---------------------------------------------------------------------------
// Infinite poles, all at once

inline AssignState assign_infinite_block(const MatrixXd& A, const MatrixXd& E, const Parametrization& par, Index count,
                                         const AssignOptions& opts = {}) {
  const Index n = A.rows();
  const Index m = par.Q1.cols();
  AssignState st = AssignState::empty(n, m);
  if (count == 0) return st;
  const MatrixXd E2 = par.Q2.transpose() * E;
  const MatrixXd A2 = par.Q2.transpose() * A;
  const MatrixXd Z = linalg::orthonormal_null_basis(E2, linalg::RankPolicy::relative_cutoff(opts.rank_rtol));
  if (Z.cols() < count)
    throw AssignmentError(0, "null space of Q2'E has dimension " + std::to_string(Z.cols()) + " < " +
                                 std::to_string(count) + " infinite poles; r is infeasible");
  st.P = Z.leftCols(count);
  st.Xi = A2 * st.P;
  st.S = MatrixXd::Identity(count, count);
  st.T = MatrixXd::Zero(count, count);
  for (Index i = 0; i < count; ++i) {
    BlockDescriptor b;
    b.start = i;
    b.kind = BlockKind::Infinite;
    st.blocks.push_back(b);
  }
  if (opts.trace) {
    StepRecord rec;
    rec.block = 0;
    rec.branch = StepBranch::Infinite;
    rec.null_dim = Z.cols();
    rec.expected_null_dim = count;
    rec.VS = st.S.topRightCorner(0, 0);
    opts.trace->steps.push_back(std::move(rec));
  }
  return st;
}

// ---------------------------------------------------------------------------
// One real (or, in FinFirst mode, infinite) pole

/// `fixed_zero_T` lists earlier columns whose entry in the new T column must
/// vanish; FinFirst uses it to keep the infinite part of the pencil at
/// index one.
inline void assign_real_pole(AssignState& st, const NormalizedPole& pole, const MatrixXd& A, const MatrixXd& E,
                             const Parametrization& par, const AssignOptions& opts = {},
                             const std::vector<Index>& fixed_zero_T = {}) {
  const int block = assign_detail::next_block_index(st);
  const Index n = A.rows();
  const Index nm = par.Q2.cols();
  const Index j = st.j();
  const double e1 = pole.eps1.real();
  const double e2 = pole.eps2.real();
  const bool alpha_dom = std::abs(e1) >= std::abs(e2);
  const MatrixXd A2 = par.Q2.transpose() * A;
  const MatrixXd E2 = par.Q2.transpose() * E;
  const Index extra = static_cast<Index>(fixed_zero_T.size());

  const Index rows = nm + j + extra;
  const Index cols = n + 2 * j;
  MatrixXd M = MatrixXd::Zero(rows, cols);
  if (alpha_dom) {
    const double ratio = e2 / e1;
    M.block(0, 0, nm, n) = E2 - ratio * A2;
    M.block(0, n, nm, j) = ratio * st.Xi;
    M.block(0, n + j, nm, j) = -st.Xi;
  } else {
    const double ratio = e1 / e2;
    M.block(0, 0, nm, n) = A2 - ratio * E2;
    M.block(0, n, nm, j) = -st.Xi;
    M.block(0, n + j, nm, j) = ratio * st.Xi;
  }
  M.block(nm, 0, j, n) = st.P.transpose();
  for (Index k = 0; k < extra; ++k) M(nm + j + k, n + j + fixed_zero_T[static_cast<std::size_t>(k)]) = 1.0;

  const auto sv = linalg::svd<double>(M);
  const Index expected = par.Q1.cols() + j - extra;
  const Index null_dim = assign_detail::constraint_null_dim(sv.sigma, rows, cols, expected, opts, block);
  const MatrixXd Z = sv.V.rightCols(null_dim);
  const MatrixXd Z1 = Z.topRows(n);
  const MatrixXd Z3 = Z.middleRows(n, j);
  const MatrixXd Z4 = Z.bottomRows(j);

  VectorXd u;
  double top = 1.0;
  StepBranch branch = StepBranch::Real;
  if (j == 0) {
    // Every unit vector of range(Z1) is optimal; take the one closest to e1.
    branch = StepBranch::RealInitial;
    VectorXd w = Z1.row(0).transpose();
    if (w.norm() <= 1e-8) w = VectorXd::Unit(null_dim, 0);
    u = w / (Z1 * w).norm();
  } else {
    const auto eig = linalg::sym_eig(Z1.transpose() * Z1);
    top = eig.values(0);
    if (!(top > opts.degenerate_tol)) throw AssignmentError(block, "Z1 degenerate (Z1 = 0)");
    u = eig.vectors.col(0) / std::sqrt(top);
  }
  const VectorXd p = Z1 * u;
  const VectorXd vS = Z3 * u;
  const VectorXd vT = Z4 * u;
  const VectorXd xi = alpha_dom ? VectorXd((A2 * p - st.Xi * vS) / e1) : VectorXd((E2 * p - st.Xi * vT) / e2);

  const Index start = j;
  assign_detail::append(st, p, xi, vS, vT, MatrixXd::Constant(1, 1, e1), MatrixXd::Constant(1, 1, e2));
  BlockDescriptor b;
  b.start = start;
  b.kind = pole.tag == CaseTag::Infinite ? BlockKind::Infinite : BlockKind::Real;
  b.eps1 = e1;
  b.eps2 = e2;
  st.blocks.push_back(b);

  if (opts.trace) {
    StepRecord rec;
    rec.block = block;
    rec.branch = branch;
    rec.null_dim = null_dim;
    rec.expected_null_dim = expected;
    rec.top_singular = std::sqrt(top);
    rec.Z1 = Z1;
    rec.u = u;
    rec.VS = vS;
    opts.trace->steps.push_back(std::move(rec));
  }
}

// ---------------------------------------------------------------------------
// Complex pairs: the coefficient problems on the null space

/// Real 4x4 symmetric matrix whose quadratic form in (gamma, zeta) equals
/// ||Re z||^2 - ||Im z||^2 for z = [psi1 psi2] (gamma + i zeta).
inline MatrixXd hamiltonian_form(const VectorXcd& psi1, const VectorXcd& psi2) {
  MatrixXd KR(psi1.size(), 2), KI(psi1.size(), 2);
  KR << psi1.real(), psi2.real();
  KI << psi1.imag(), psi2.imag();
  const MatrixXd D = KR.transpose() * KR - KI.transpose() * KI;
  const MatrixXd C = KR.transpose() * KI + KI.transpose() * KR;
  MatrixXd H(4, 4);
  H << D, -C, -C, -D;
  return H;
}

/// Unit c in C^2 with (psi1 c1 + psi2 c2) isotropic, i.e. z'z = 0 without
/// conjugation, so that its real and imaginary parts are orthogonal with
/// equal norms. Among the (up to two) admissible directions the one with
/// the largest |c1| is returned.
inline Eigen::Vector2cd isotropic_combination(const VectorXcd& psi1, const VectorXcd& psi2) {
  const Complex c11 = psi1.transpose() * psi1;
  const Complex c12 = psi1.transpose() * psi2;
  const Complex c22 = psi2.transpose() * psi2;
  const double scale = std::abs(c11) + std::abs(c12) + std::abs(c22);
  Eigen::Vector2cd c;
  if (std::abs(c11) <= 1e-14 * scale) {
    c << 1.0, 0.0;
    return c;
  }
  // c11 t^2 + 2 c12 t + c22 = 0 with t = c1 / c2.
  const Complex disc = std::sqrt(c12 * c12 - c11 * c22);
  const Complex qa = -(c12 + disc);
  const Complex qb = -(c12 - disc);
  const Complex q = std::abs(qa) >= std::abs(qb) ? qa : qb;
  Complex t;
  if (q == 0.0) {
    t = 0.0;
  } else {
    const Complex t1 = q / c11;
    const Complex t2 = c22 / q;
    t = std::abs(t1) >= std::abs(t2) ? t1 : t2;
  }
  const double at = std::abs(t);
  if (at > 1e150) {
    c << 1.0, 0.0;
    return c;
  }
  const double norm = std::sqrt(1.0 + at * at);
  c << t / norm, 1.0 / norm;
  return c;
}

/// Result of the per-pair optimization expressed in null-space coordinates:
/// z = Z1 b, v = Z34 b.
struct ComplexChoice {
  VectorXcd b;
  StepBranch branch = StepBranch::ComplexIsotropic;
  double rho1 = std::numeric_limits<double>::infinity();
  double rho2 = std::numeric_limits<double>::infinity();
  double objective = 0.0;
  VectorXd nu;
  MatrixXd H;
  VectorXd h;
  double zeta = 0.0;
  VectorXd f;
  MatrixXcd V;
  linalg::Rotation rot;
  double sig1 = 0.0, sig2 = 0.0;
};

namespace assign_detail {

/// Value of sum_l ||Re/Im v||^2 / ||Re/Im z||^2 + tau^2 (delta - 1/delta)^2
/// after making Re z and Im z orthogonal by a phase rotation.
inline double pair_objective(const VectorXcd& z, const VectorXcd& v, double tau) {
  linalg::Rotation rot;
  try {
    rot = linalg::jacobi_orthogonalize(z.real(), z.imag());
  } catch (const InvalidInput&) {
    return std::numeric_limits<double>::infinity();
  }
  const Complex ph(rot.c, rot.s);
  const VectorXcd zr = ph * z;
  const VectorXcd vr = ph * v;
  const double s1 = zr.real().squaredNorm();
  const double s2 = zr.imag().squaredNorm();
  const double d = std::sqrt(s1 / s2);
  return vr.real().squaredNorm() / s1 + vr.imag().squaredNorm() / s2 + tau * tau * (d - 1.0 / d) * (d - 1.0 / d);
}

}  // namespace assign_detail

/// Solve the coefficient problem for one conjugate pair given the null
/// basis split into its P-part Z1 (n rows) and its (S, T)-part Z34.
inline ComplexChoice choose_complex_coefficients(const MatrixXcd& Z1, const MatrixXcd& Z34, double tau,
                                                 int block = -1, const AssignOptions& opts = {}) {
  ComplexChoice out;
  const Index k = Z1.cols();
  const auto sv = linalg::svd<Complex>(Z1);
  out.nu = sv.sigma;
  out.V = sv.V;
  if (sv.sigma.size() == 0 || !(sv.sigma(0) > opts.degenerate_tol))
    throw AssignmentError(block, "Z1 degenerate (Z1 = 0)");
  const double nu1 = sv.sigma(0);
  const VectorXcd psi1 = sv.U.col(0);
  const bool rank_one = sv.sigma.size() < 2 || sv.sigma(1) <= opts.rank_one_ratio * nu1;

  if (rank_one) {
    out.branch = StepBranch::ComplexRankOne;
    linalg::Rotation rot;
    try {
      rot = linalg::jacobi_orthogonalize(psi1.real(), psi1.imag());
    } catch (const InvalidInput&) {
      throw AssignmentError(block, "Re(psi1) and Im(psi1) are linearly dependent");
    }
    const VectorXd pt1 = rot.c * psi1.real() - rot.s * psi1.imag();
    const VectorXd pt2 = rot.s * psi1.real() + rot.c * psi1.imag();
    const double s1 = pt1.squaredNorm();  // varsigma_1^2
    const double s2 = pt2.squaredNorm();
    const MatrixXcd ZV = Z34 * sv.V;
    const VectorXcd w = ZV.col(0);
    const MatrixXcd W = ZV.rightCols(k - 1);
    const Index kk = k - 1;
    MatrixXd K1(Z34.rows(), 2 * kk), K2(Z34.rows(), 2 * kk);
    K1 << W.real(), -W.imag();
    K2 << W.imag(), W.real();
    const MatrixXd L1 = rot.c * K1 - rot.s * K2;
    const MatrixXd L2 = rot.s * K1 + rot.c * K2;
    const VectorXd a1 = (rot.c * w.real() - rot.s * w.imag()) / nu1;
    const VectorXd a2 = (rot.s * w.real() + rot.c * w.imag()) / nu1;
    out.H = L1.transpose() * L1 / s1 + L2.transpose() * L2 / s2;
    out.h = 2.0 * (L1.transpose() * a1 / s1 + L2.transpose() * a2 / s2);
    const double d = std::sqrt(s1 / s2);
    out.zeta = a1.squaredNorm() / s1 + a2.squaredNorm() / s2 + tau * tau * (d - 1.0 / d) * (d - 1.0 / d);
    out.f = VectorXd::Zero(2 * kk);
    if (kk > 0) {
      const auto hs = linalg::sym_eig(out.H);
      const double lmax = hs.values(0);
      const double lmin = hs.values(hs.values.size() - 1);
      if (!(lmin > 0.0) || lmax / lmin > 1e14)
        throw AssignmentError(block, "H is numerically singular");
      if (out.h.squaredNorm() > 0.0) out.f = -0.5 * out.H.ldlt().solve(out.h);
    }
    VectorXcd coef(k);
    coef(0) = 1.0 / nu1;
    for (Index i = 0; i < kk; ++i) coef(1 + i) = Complex(out.f(i), out.f(kk + i));
    out.b = sv.V * coef;
    out.rot = rot;
    out.sig1 = std::sqrt(s1);
    out.sig2 = std::sqrt(s2);
    out.objective = out.f.dot(out.H * out.f) + out.h.dot(out.f) + out.zeta;
    return out;
  }

  // Rank >= 2. Strategy 1: scaled psi1 with its Jacobi rotation.
  const VectorXcd b1 = sv.V.col(0) / nu1;
  out.rho1 = assign_detail::pair_objective(Z1 * b1, Z34 * b1, tau);
  // Strategy 2: isotropic combination of psi1, psi2 (delta = 1).
  const double nu2 = sv.sigma(1);
  const Eigen::Vector2cd c = isotropic_combination(psi1, sv.U.col(1));
  const VectorXcd b2 = sv.V.col(0) * (c(0) / nu1) + sv.V.col(1) * (c(1) / nu2);
  out.rho2 = 2.0 * ((1.0 - nu1 * nu1) / (nu1 * nu1) * std::norm(c(0)) + (1.0 - nu2 * nu2) / (nu2 * nu2) * std::norm(c(1)));
  if (out.rho1 < out.rho2) {
    out.branch = StepBranch::ComplexJacobi;
    out.b = b1;
    out.objective = out.rho1;
  } else {
    out.branch = StepBranch::ComplexIsotropic;
    out.b = b2;
    out.objective = out.rho2;
  }
  return out;
}

inline void assign_complex_pair(AssignState& st, const NormalizedPole& pole, const MatrixXd& A, const MatrixXd& E,
                                const Parametrization& par, const AssignOptions& opts = {}) {
  const int block = assign_detail::next_block_index(st);
  const Index n = A.rows();
  const Index nm = par.Q2.cols();
  const Index j = st.j();
  const bool alpha_dom = pole.tag == CaseTag::ComplexAlphaDominant;
  if (!alpha_dom && pole.tag != CaseTag::ComplexBetaDominant)
    throw InvalidInput("assign_complex_pair: pole is not a complex pair");
  const Complex gamma(pole.sigma, pole.tau);
  const MatrixXd A2 = par.Q2.transpose() * A;
  const MatrixXd E2 = par.Q2.transpose() * E;
  const MatrixXcd A2c = A2.cast<Complex>();
  const MatrixXcd E2c = E2.cast<Complex>();
  const MatrixXcd Xic = st.Xi.cast<Complex>();

  const Index rows = nm + j;
  const Index cols = n + 2 * j;
  MatrixXcd M = MatrixXcd::Zero(rows, cols);
  if (alpha_dom) {
    M.block(0, 0, nm, n) = E2c - gamma * A2c;
    M.block(0, n, nm, j) = gamma * Xic;
    M.block(0, n + j, nm, j) = -Xic;
  } else {
    M.block(0, 0, nm, n) = A2c - gamma * E2c;
    M.block(0, n, nm, j) = -Xic;
    M.block(0, n + j, nm, j) = gamma * Xic;
  }
  M.block(nm, 0, j, n) = st.P.transpose().cast<Complex>();

  const auto sv = linalg::svd<Complex>(M);
  const Index expected = par.Q1.cols() + j;
  const Index null_dim = assign_detail::constraint_null_dim(sv.sigma, rows, cols, expected, opts, block);
  const MatrixXcd Z = sv.V.rightCols(null_dim);
  const MatrixXcd Z1 = Z.topRows(n);
  const MatrixXcd Z34 = Z.bottomRows(2 * j);

  const ComplexChoice choice = choose_complex_coefficients(Z1, Z34, pole.tau, block, opts);

  // Phase-rotate so that Re z and Im z are exactly orthogonal.
  VectorXcd z = Z1 * choice.b;
  VectorXcd v = Z34 * choice.b;
  linalg::Rotation rot;
  try {
    rot = linalg::jacobi_orthogonalize(z.real(), z.imag());
  } catch (const InvalidInput&) {
    throw AssignmentError(block, "real and imaginary parts of the chosen vector are dependent");
  }
  const Complex phase(rot.c, rot.s);
  z *= phase;
  v *= phase;
  const double s1 = z.real().norm();
  const double s2 = z.imag().norm();
  const double delta = s1 / s2;

  MatrixXd p(n, 2), vS(j, 2), vT(j, 2);
  p << z.real() / s1, z.imag() / s2;
  const VectorXcd vSc = v.head(j);
  const VectorXcd vTc = v.tail(j);
  vS << vSc.real() / s1, vSc.imag() / s2;
  vT << vTc.real() / s1, vTc.imag() / s2;

  MatrixXd D(2, 2);
  D << pole.sigma, delta * pole.tau, -pole.tau / delta, pole.sigma;
  MatrixXd xi(nm, 2);
  if (alpha_dom)
    xi = A2 * p - st.Xi * vS;
  else
    xi = E2 * p - st.Xi * vT;
  const MatrixXd I2 = MatrixXd::Identity(2, 2);

  const Index start = j;
  if (alpha_dom)
    assign_detail::append(st, p, xi, vS, vT, I2, D);
  else
    assign_detail::append(st, p, xi, vS, vT, D, I2);
  BlockDescriptor b;
  b.start = start;
  b.size = 2;
  b.kind = alpha_dom ? BlockKind::ComplexAlphaDominant : BlockKind::ComplexBetaDominant;
  b.delta = delta;
  b.sigma = pole.sigma;
  b.tau = pole.tau;
  st.blocks.push_back(b);

  if (opts.trace) {
    StepRecord rec;
    rec.block = block;
    rec.branch = choice.branch;
    rec.null_dim = null_dim;
    rec.expected_null_dim = expected;
    rec.top_singular = choice.nu.size() > 0 ? choice.nu(0) : 0.0;
    rec.Z1c = Z1;
    rec.Z34c = Z34;
    rec.nu = choice.nu;
    rec.rho1 = choice.rho1;
    rec.rho2 = choice.rho2;
    rec.objective = choice.objective;
    rec.tau = pole.tau;
    rec.delta = delta;
    rec.H = choice.H;
    rec.h = choice.h;
    rec.zeta = choice.zeta;
    rec.f = choice.f;
    rec.V = choice.V;
    rec.rot = choice.rot;
    rec.sig1 = choice.sig1;
    rec.sig2 = choice.sig2;
    rec.VS = vS;
    opts.trace->steps.push_back(std::move(rec));
  }
}

// ---------------------------------------------------------------------------
// Completion

inline MatrixXd complete_X(const Parametrization& par, const MatrixXd& Xi) {
  const Index n = par.Q1.rows();
  const Index m = par.Q1.cols();
  if (Xi.rows() != n - m || Xi.cols() != n) throw InvalidInput("complete_X: Xi must be (n - m) x n");
  if (n == m) return par.Q1;
  if (linalg::numerical_rank(Xi, linalg::RankPolicy::relative_cutoff(1e-13)).rank != n - m)
    throw AssignmentError(-1, "state inconsistent: Xi is not of full row rank");
  const auto qr = linalg::qr_decompose(Xi.transpose());
  MatrixXd Y = qr.Q.rightCols(m).transpose();
  // Fix the sign of each completing row: largest-magnitude entry positive.
  for (Index i = 0; i < m; ++i) {
    Index arg = 0;
    Y.row(i).cwiseAbs().maxCoeff(&arg);
    if (Y(i, arg) < 0.0) Y.row(i) *= -1.0;
  }
  return par.Q1 * Y + par.Q2 * Xi;
}

inline std::pair<MatrixXd, MatrixXd> extract_feedback(const MatrixXd& A, const MatrixXd& E, const Parametrization& par,
                                                      const MatrixXd& X, const MatrixXd& S, const MatrixXd& T,
                                                      const MatrixXd& P) {
  const auto Rt = par.R.triangularView<Eigen::Upper>();
  const MatrixXd F = Rt.solve(par.Q1.transpose() * (X * S * P.transpose() - A));
  const MatrixXd G = Rt.solve(par.Q1.transpose() * (X * T * P.transpose() - E));
  return {F, G};
}

// ---------------------------------------------------------------------------
// Pipeline

/// Order in which the finite poles are placed: real poles by ascending
/// value, then conjugate pairs in input order.
inline std::vector<PolePair> finite_placement_order(const std::vector<PolePair>& poles) {
  std::vector<PolePair> reals, pairs;
  for (const auto& p : poles) {
    if (p.is_infinite()) continue;
    (p.is_complex() ? pairs : reals).push_back(p);
  }
  std::stable_sort(reals.begin(), reals.end(),
                   [](const PolePair& a, const PolePair& b) { return a.lambda().real() < b.lambda().real(); });
  reals.insert(reals.end(), pairs.begin(), pairs.end());
  return reals;
}

inline Solution run_pipeline(const Problem& p, const AssignOptions& opts = {}) {
  const Index n = p.n();
  const Index count_inf = p.infinite_count();
  const Parametrization par = compute_parametrization(p.B);
  const auto finite = finite_placement_order(p.poles);

  auto place_finite = [&](AssignState& st, const PolePair& pole) {
    const NormalizedPole np = normalize_pole(pole);
    if (pole.is_complex())
      assign_complex_pair(st, np, p.A, p.E, par, opts);
    else
      assign_real_pole(st, np, p.A, p.E, par, opts);
  };

  AssignState st;
  if (opts.order == Order::InfFirst) {
    st = assign_infinite_block(p.A, p.E, par, count_inf, opts);
    for (const auto& pole : finite) place_finite(st, pole);
  } else {
    st = AssignState::empty(n, p.m());
    for (const auto& pole : finite) place_finite(st, pole);
    std::vector<Index> infinite_cols;
    const NormalizedPole inf = normalize_pole(PolePair::infinite());
    AssignOptions relaxed = opts;
    relaxed.allow_rank_deficient = true;
    for (Index k = 0; k < count_inf; ++k) {
      const Index col = st.j();
      assign_real_pole(st, inf, p.A, p.E, par, relaxed, infinite_cols);
      infinite_cols.push_back(col);
    }
  }

  Solution sol;
  sol.P = st.P;
  sol.S = st.S;
  sol.T = st.T;
  sol.blocks = st.blocks;
  sol.X = complete_X(par, st.Xi);
  std::tie(sol.F, sol.G) = extract_feedback(p.A, p.E, par, sol.X, sol.S, sol.T, sol.P);
  return sol;
}

}  // namespace drschur
