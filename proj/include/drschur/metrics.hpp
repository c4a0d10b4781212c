#pragma once

// Robustness and accuracy metrics, and verification of a computed feedback
// against the problem it claims to solve. Everything here recomputes from
// (E, A, B, F, G) and the Schur factors; nothing is taken on trust from the
// assignment step.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "drschur/assign.hpp"
#include "drschur/errors.hpp"
#include "drschur/linalg.hpp"
#include "drschur/oracle.hpp"
#include "drschur/pole.hpp"
#include "drschur/problem.hpp"

namespace drschur {

// ---------------------------------------------------------------------------
// Departure from normality

namespace metrics_detail {

inline void check_blocks(const MatrixXd& S, const MatrixXd& T, const std::vector<BlockDescriptor>& blocks) {
  const Index n = S.rows();
  if (S.cols() != n || T.rows() != n || T.cols() != n) throw InvalidInput("S and T must be square of equal size");
  Index pos = 0;
  for (const auto& b : blocks) {
    if (b.start != pos || (b.size != 1 && b.size != 2)) throw InvalidInput("blocks do not tile the diagonal");
    pos += b.size;
  }
  if (pos != n) throw InvalidInput("blocks do not cover the matrix");
  for (const auto& b : blocks) {
    const Index end = b.start + b.size;
    for (Index i = end; i < n; ++i)
      for (Index k = b.start; k < end; ++k)
        if (S(i, k) != 0.0 || T(i, k) != 0.0) throw InvalidInput("S, T are not block upper triangular");
  }
}

}  // namespace metrics_detail

/// ||S - Phi||_F^2 + ||T - Psi||_F^2 + sum over 2x2 blocks of tau^2 (delta - 1/delta)^2,
/// Phi and Psi being the block diagonals of S and T.
inline double departure_measure(const MatrixXd& S, const MatrixXd& T, const std::vector<BlockDescriptor>& blocks) {
  metrics_detail::check_blocks(S, T, blocks);
  MatrixXd S0 = S, T0 = T;
  double extra = 0.0;
  for (const auto& b : blocks) {
    S0.block(b.start, b.start, b.size, b.size).setZero();
    T0.block(b.start, b.start, b.size, b.size).setZero();
    if (b.size == 2) {
      const double d = b.delta - 1.0 / b.delta;
      extra += b.tau * b.tau * d * d;
    }
  }
  return S0.squaredNorm() + T0.squaredNorm() + extra;
}

/// Poles carried by the diagonal blocks of (S, T), one canonical entry per
/// block (a 2x2 block yields its Im > 0 representative).
inline std::vector<PolePair> extract_poles_from_schur(const MatrixXd& S, const MatrixXd& T,
                                                      const std::vector<BlockDescriptor>& blocks) {
  std::vector<PolePair> out;
  for (const auto& b : blocks) {
    if (b.size == 1) {
      const double s = S(b.start, b.start);
      const double t = T(b.start, b.start);
      out.push_back(t == 0.0 ? PolePair::infinite() : canonicalize(s, t));
      continue;
    }
    const Eigen::Matrix2d Sb = S.block<2, 2>(b.start, b.start);
    const Eigen::Matrix2d Tb = T.block<2, 2>(b.start, b.start);
    // det(Sb - lambda Tb) = 0; use whichever factor is better conditioned.
    Complex mu;
    const bool alpha_side = b.kind != BlockKind::ComplexBetaDominant;
    const Eigen::Matrix2d K = alpha_side ? Eigen::Matrix2d(Sb.inverse() * Tb) : Eigen::Matrix2d(Tb.inverse() * Sb);
    const double tr = K.trace();
    const double det = K.determinant();
    const double disc = tr * tr / 4.0 - det;
    mu = disc < 0.0 ? Complex(tr / 2.0, std::sqrt(-disc)) : Complex(tr / 2.0 + std::sqrt(disc), 0.0);
    const PolePair pole = alpha_side ? canonicalize(1.0, mu) : canonicalize(mu, 1.0);
    out.push_back(pole);
    if (disc >= 0.0) {
      // Degenerate block with two real eigenvalues.
      const Complex mu2(tr / 2.0 - std::sqrt(disc), 0.0);
      out.push_back(alpha_side ? canonicalize(1.0, mu2) : canonicalize(mu2, 1.0));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pole accuracy

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method,
/// O(n^3)). Returns assignment[row] = column.
inline std::vector<Index> hungarian(const MatrixXd& cost) {
  const Index n = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<Index> p(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<bool> used(static_cast<std::size_t>(n + 1), false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const Index i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Index> assignment(static_cast<std::size_t>(n), 0);
  for (Index j = 1; j <= n; ++j)
    if (p[static_cast<std::size_t>(j)] != 0) assignment[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return assignment;
}

struct PrecsResult {
  double value = std::numeric_limits<double>::infinity();
  bool count_mismatch = false;
};

inline constexpr double kPrecsFloor = -17.0;

inline double relative_pole_error(Complex requested, Complex computed) {
  const double err = std::abs(requested - computed);
  const double mag = std::abs(requested);
  return mag > 0.0 ? err / mag : err;
}

/// log10 of the worst relative error after optimally matching the two
/// eigenvalue lists; -17 for exact agreement. +inf when the counts differ.
inline PrecsResult precs_metric(const std::vector<Complex>& requested, const std::vector<Complex>& computed) {
  PrecsResult out;
  if (requested.size() != computed.size()) {
    out.count_mismatch = true;
    return out;
  }
  const Index k = static_cast<Index>(requested.size());
  if (k == 0) {
    out.value = kPrecsFloor;
    return out;
  }
  MatrixXd cost(k, k);
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < k; ++j)
      cost(i, j) = relative_pole_error(requested[static_cast<std::size_t>(i)], computed[static_cast<std::size_t>(j)]);
  if (!linalg::all_finite(cost)) return out;
  const auto match = hungarian(cost);
  double worst = 0.0;
  for (Index i = 0; i < k; ++i) worst = std::max(worst, cost(i, match[static_cast<std::size_t>(i)]));
  out.value = worst > 0.0 ? std::max(std::log10(worst), kPrecsFloor) : kPrecsFloor;
  return out;
}

// ---------------------------------------------------------------------------
// Conditioning

/// Frobenius condition number of a unit-column eigenvector matrix of the
/// pencil (Ac, Ec); empty when the finite spectrum has (near) repeated
/// eigenvalues or the infinite part is not semisimple.
inline std::optional<double> eigenvector_condition(const MatrixXd& Ac, const MatrixXd& Ec,
                                                   const std::vector<Complex>& finite,
                                                   double distinct_rtol = 1e-8) {
  const Index n = Ac.rows();
  const Index k = static_cast<Index>(finite.size());
  for (Index i = 0; i < k; ++i)
    for (Index j = i + 1; j < k; ++j) {
      const Complex a = finite[static_cast<std::size_t>(i)];
      const Complex b = finite[static_cast<std::size_t>(j)];
      if (std::abs(a - b) <= distinct_rtol * std::max({std::abs(a), std::abs(b), 1e-300})) return std::nullopt;
    }
  const MatrixXd N = linalg::orthonormal_null_basis(Ec, linalg::RankPolicy::relative_cutoff(1e-10));
  if (N.cols() != n - k) return std::nullopt;
  MatrixXcd V(n, n);
  const MatrixXcd Acc = Ac.cast<Complex>();
  const MatrixXcd Ecc = Ec.cast<Complex>();
  // Inverse iteration from a fixed start vector. The shift is nudged off the
  // eigenvalue so that exactly singular shifted matrices still factor.
  const VectorXcd start = VectorXcd::Constant(n, Complex(1.0, 0.5)) + VectorXcd::LinSpaced(n, 0.0, 1.0).cast<Complex>();
  const double scale = Ac.norm() + Ec.norm();
  for (Index i = 0; i < k; ++i) {
    const Complex lambda = finite[static_cast<std::size_t>(i)];
    const Complex shift = lambda + Complex(1.0, 1.0) * (1e-13 * std::max(std::abs(lambda), 1.0));
    const MatrixXcd M = Acc - shift * Ecc;
    Eigen::PartialPivLU<MatrixXcd> lu(M);
    VectorXcd x = start.normalized();
    for (int it = 0; it < 3; ++it) {
      VectorXcd y = lu.solve(x);
      if (!linalg::all_finite(y) || !(y.norm() > 0.0)) return std::nullopt;
      x = y.normalized();
    }
    // Accept only a converged eigenvector.
    if (!((Acc * x - lambda * (Ecc * x)).norm() <= 1e-8 * scale * std::max(std::abs(lambda), 1.0)))
      return std::nullopt;
    V.col(i) = x;
  }
  V.rightCols(n - k) = N.cast<Complex>();
  try {
    return linalg::condition_frobenius<Complex>(V);
  } catch (const InvalidInput&) {
    return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Report

struct Report {
  double precs = std::numeric_limits<double>::infinity();
  bool pole_count_mismatch = false;
  double precs_schur = std::numeric_limits<double>::quiet_NaN();  // from the diagonal blocks of (S, T)
  double deltaF2 = std::numeric_limits<double>::quiet_NaN();
  double normF = 0.0;
  double normG = 0.0;
  double kappaXGF = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> kappaX;
  double residualA = std::numeric_limits<double>::quiet_NaN();
  double residualE = std::numeric_limits<double>::quiet_NaN();
  double orthogonality = std::numeric_limits<double>::quiet_NaN();
  Index infinite_count = 0;
  Index finite_count = 0;
  Index rank_EBG = 0;
  bool regular = false;
  bool index_ok = false;
  bool pass = false;
  std::vector<std::string> failures;
};

struct VerifyOptions {
  double residual_tol = 1e-10;  // relative to ||A||_F + ||E||_F + ||X||_F
  double precs_threshold = -6.0;
  double rank_rtol = 1e-10;
};

namespace metrics_detail {

inline void closed_loop_checks(const Problem& p, const MatrixXd& Ac, const MatrixXd& Ec, Report& rep,
                               const VerifyOptions& opts) {
  const Index n = p.n();
  std::vector<Complex> computed;
  PencilSpectrum sp;
  try {
    sp = pencil_spectrum(Ac, Ec);
    computed = sp.finite;
    rep.regular = true;
    rep.infinite_count = sp.infinite_count;
    rep.finite_count = static_cast<Index>(sp.finite.size());
  } catch (const SingularPencil&) {
    rep.regular = false;
    rep.failures.push_back("closed-loop pencil is singular");
  }
  if (rep.regular) {
    const PrecsResult pr = precs_metric(finite_eigenvalues(p.poles), computed);
    rep.precs = pr.value;
    rep.pole_count_mismatch = pr.count_mismatch;
    const IndexCheck ic = index_check_with_spectrum(Ac, Ec, sp, p.r, opts.rank_rtol);
    rep.index_ok = ic.index_le_1;
    rep.rank_EBG = ic.rank_E;
    if (!rep.index_ok) rep.failures.push_back("closed-loop index exceeds one");
    if (rep.finite_count != p.r)
      rep.failures.push_back("closed loop has " + std::to_string(rep.finite_count) + " finite poles, expected " +
                             std::to_string(p.r));
    if (rep.pole_count_mismatch || !(rep.precs <= opts.precs_threshold))
      rep.failures.push_back("closed-loop poles do not match the requested ones");
    if (!rep.pole_count_mismatch && rep.finite_count == n - rep.infinite_count)
      rep.kappaX = eigenvector_condition(Ac, Ec, computed);
  }
}

}  // namespace metrics_detail

/// Full report for a pipeline result.
inline Report verify_solution(const Problem& p, const Solution& sol, const VerifyOptions& opts = {}) {
  Report rep;
  const Index n = p.n();
  const MatrixXd Ac = p.A + p.B * sol.F;
  const MatrixXd Ec = p.E + p.B * sol.G;
  const double scale = p.A.norm() + p.E.norm() + sol.X.norm();
  rep.residualA = (Ac * sol.P - sol.X * sol.S).norm() / scale;
  rep.residualE = (Ec * sol.P - sol.X * sol.T).norm() / scale;
  rep.orthogonality = (sol.P.transpose() * sol.P - MatrixXd::Identity(n, n)).norm();
  rep.normF = sol.F.norm();
  rep.normG = sol.G.norm();
  try {
    rep.deltaF2 = departure_measure(sol.S, sol.T, sol.blocks);
    const auto schur_poles = extract_poles_from_schur(sol.S, sol.T, sol.blocks);
    rep.precs_schur = precs_metric(finite_eigenvalues(p.poles), finite_eigenvalues(schur_poles)).value;
  } catch (const InvalidInput& e) {
    rep.failures.push_back(std::string("Schur factors inconsistent: ") + e.what());
  }
  try {
    rep.kappaXGF = linalg::condition_frobenius<double>(sol.X);
  } catch (const InvalidInput&) {
    rep.failures.push_back("X is singular");
  }
  if (!(rep.residualA + rep.residualE <= opts.residual_tol))
    rep.failures.push_back("Schur residuals exceed tolerance");
  if (!(rep.orthogonality <= 1e-10)) rep.failures.push_back("P is not orthogonal");
  metrics_detail::closed_loop_checks(p, Ac, Ec, rep, opts);
  rep.pass = rep.failures.empty();
  return rep;
}

/// Report from (F, G) alone: closed-loop spectrum, index and norms. Schur
/// residuals, departure and kappa(X_GF) are not available.
inline Report verify_feedback(const Problem& p, const MatrixXd& F, const MatrixXd& G, const VerifyOptions& opts = {}) {
  Report rep;
  if (F.rows() != p.m() || F.cols() != p.n() || G.rows() != p.m() || G.cols() != p.n())
    throw InvalidInput("feedback dimensions do not match the problem");
  linalg::require_finite(F, "F");
  linalg::require_finite(G, "G");
  rep.normF = F.norm();
  rep.normG = G.norm();
  metrics_detail::closed_loop_checks(p, p.A + p.B * F, p.E + p.B * G, rep, opts);
  rep.pass = rep.failures.empty();
  return rep;
}

}  // namespace drschur
