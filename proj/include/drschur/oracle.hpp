#pragma once

// Independent spectrum oracle for a square pencil (Ac, Ec).
//
// p(lambda) = det(Ac - lambda Ec) is sampled through LU determinants on a
// circle of radius rho, its monomial coefficients are recovered with an
// inverse DFT, coefficients below tol * max|coeff| at the top end are
// dropped to find the degree, and the roots come from the companion matrix.
// Each root is then polished with Aberth iterations on the exact determinant,
// using p'/p = -trace((Ac - lambda Ec)^{-1} Ec), so the final accuracy is
// that of the pencil, not of the monomial coefficients.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "drschur/errors.hpp"
#include "drschur/linalg.hpp"
#include "drschur/pole.hpp"

namespace drschur {

struct OracleOptions {
  double degree_tol = 1e-11;      // relative cutoff for the leading coefficients
  double singular_rtol = 0.0;     // 0 -> 100 * n * eps
  int max_polish_iterations = 80;
  // Roots with |lambda| ||E|| > infinite_ratio ||A|| are counted as infinite.
  double infinite_ratio = 1e10;
};

struct PencilSpectrum {
  std::vector<Complex> finite;  // conjugate-symmetric up to rounding
  Index infinite_count = 0;
  double radius = 1.0;          // sampling radius used
};

namespace oracle_detail {

// p'(lambda)/p(lambda) for p = det(Ac - lambda Ec); returns NaN if the
// shifted matrix is exactly singular.
inline Complex log_derivative(const MatrixXcd& Ac, const MatrixXcd& Ec, Complex lambda) {
  const MatrixXcd M = Ac - lambda * Ec;
  Eigen::PartialPivLU<MatrixXcd> lu(M);
  const auto& U = lu.matrixLU();
  for (Index i = 0; i < U.rows(); ++i)
    if (U(i, i) == 0.0) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
  const MatrixXcd X = lu.solve(Ec);
  return -X.trace();
}

inline void polish_aberth(const MatrixXcd& Ac, const MatrixXcd& Ec, std::vector<Complex>& roots,
                          const std::vector<bool>& is_real, double scale, int max_iter) {
  const std::size_t d = roots.size();
  if (d == 0) return;
  std::vector<bool> done(d, false);
  std::vector<double> last(d, std::numeric_limits<double>::infinity());
  for (int it = 0; it < max_iter; ++it) {
    bool all_done = true;
    for (std::size_t k = 0; k < d; ++k) {
      if (done[k]) continue;
      const Complex ld = log_derivative(Ac, Ec, roots[k]);
      if (!std::isfinite(ld.real()) || !std::isfinite(ld.imag()) || ld == 0.0) {
        done[k] = true;
        continue;
      }
      const Complex newton = 1.0 / ld;
      Complex repulsion = 0.0;
      for (std::size_t i = 0; i < d; ++i)
        if (i != k && roots[i] != roots[k]) repulsion += 1.0 / (roots[k] - roots[i]);
      Complex step = newton / (1.0 - newton * repulsion);
      if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) {
        done[k] = true;
        continue;
      }
      if (is_real[k]) step = {step.real(), 0.0};
      roots[k] -= step;
      const double size = std::abs(step);
      // Stop at rounding level, or once the corrections stop shrinking.
      if (size <= 4.0 * linalg::kEps * std::max(std::abs(roots[k]), 1e-3 * scale) || (it >= 3 && size > 0.9 * last[k]))
        done[k] = true;
      else
        all_done = false;
      last[k] = size;
    }
    if (all_done) break;
  }
}

}  // namespace oracle_detail

/// Finite generalized eigenvalues and infinite-eigenvalue count of a square
/// real pencil. Throws SingularPencil when det(Ac - lambda Ec) vanishes
/// identically.
inline PencilSpectrum pencil_spectrum(const MatrixXd& Ac, const MatrixXd& Ec,
                                      const OracleOptions& opts = {}) {
  linalg::require_finite(Ac, "pencil_spectrum");
  linalg::require_finite(Ec, "pencil_spectrum");
  if (Ac.rows() != Ac.cols() || Ec.rows() != Ec.cols() || Ac.rows() != Ec.rows())
    throw InvalidInput("pencil_spectrum: pencil must be square with matching sizes");
  const Index n = Ac.rows();
  PencilSpectrum out;
  if (n == 0) return out;

  const double na = Ac.norm();
  const double ne = Ec.norm();
  double rho = 1.0;
  if (na > 0.0 && ne > 0.0) rho = na / ne;
  out.radius = rho;

  const MatrixXcd Acc = Ac.cast<Complex>();
  const MatrixXcd Ecc = Ec.cast<Complex>();
  const Index N = n + 1;
  const double singular_rtol =
      opts.singular_rtol > 0.0 ? opts.singular_rtol : 100.0 * static_cast<double>(n) * linalg::kEps;

  // Samples at rho * exp(i * 2 pi (k + 1/2) / N); the half offset keeps the
  // nodes off the real axis so real eigenvalues are never hit exactly.
  std::vector<Complex> samples(static_cast<std::size_t>(N));
  double best_conditioning = 0.0;
  for (Index k = 0; k < N; ++k) {
    const double theta = 2.0 * std::numbers::pi * (static_cast<double>(k) + 0.5) / static_cast<double>(N);
    const Complex z = std::polar(rho, theta);
    const MatrixXcd M = Acc - z * Ecc;
    Eigen::PartialPivLU<MatrixXcd> lu(M);
    samples[static_cast<std::size_t>(k)] = lu.determinant();
    if (k < 3) {
      const auto r = linalg::numerical_rank<Complex>(M, linalg::RankPolicy::absolute_cutoff(0.0));
      const VectorXd& s = r.singular_values;
      if (s(0) > 0.0) best_conditioning = std::max(best_conditioning, s(s.size() - 1) / s(0));
    }
  }
  if (best_conditioning <= singular_rtol)
    throw SingularPencil("pencil is singular: det(A - lambda E) vanishes identically");

  // Coefficients of q(x) = p(rho x) (p has real coefficients), the degree
  // and the companion roots of q.
  struct Pass {
    Index degree = 0;
    std::vector<Complex> roots;
    std::vector<bool> is_real;
  };
  auto interpolate = [&](double radius, const std::vector<Complex>& values) {
    std::vector<double> coeff(static_cast<std::size_t>(N), 0.0);
    for (Index j = 0; j < N; ++j) {
      Complex acc = 0.0;
      for (Index k = 0; k < N; ++k) {
        const double theta = -2.0 * std::numbers::pi * static_cast<double>(j) *
                             (static_cast<double>(k) + 0.5) / static_cast<double>(N);
        acc += values[static_cast<std::size_t>(k)] * std::polar(1.0, theta);
      }
      coeff[static_cast<std::size_t>(j)] = acc.real() / static_cast<double>(N);
    }
    double cmax = 0.0;
    for (double c : coeff) cmax = std::max(cmax, std::abs(c));
    Pass pass;
    pass.degree = n;
    while (pass.degree > 0 && std::abs(coeff[static_cast<std::size_t>(pass.degree)]) <= opts.degree_tol * cmax)
      --pass.degree;
    const Index d = pass.degree;
    if (d == 0) return pass;
    MatrixXd C = MatrixXd::Zero(d, d);
    const double lead = coeff[static_cast<std::size_t>(d)];
    for (Index i = 1; i < d; ++i) C(i, i - 1) = 1.0;
    for (Index i = 0; i < d; ++i) C(i, d - 1) = -coeff[static_cast<std::size_t>(i)] / lead;
    Eigen::EigenSolver<MatrixXd> es(C, false);
    const VectorXcd x = es.eigenvalues();
    for (Index i = 0; i < d; ++i) {
      pass.roots.push_back(radius * x(i));
      pass.is_real.push_back(x(i).imag() == 0.0);
    }
    return pass;
  };
  auto sample = [&](double radius) {
    std::vector<Complex> values(static_cast<std::size_t>(N));
    for (Index k = 0; k < N; ++k) {
      const double theta = 2.0 * std::numbers::pi * (static_cast<double>(k) + 0.5) / static_cast<double>(N);
      values[static_cast<std::size_t>(k)] = Eigen::PartialPivLU<MatrixXcd>(Acc - std::polar(radius, theta) * Ecc).determinant();
    }
    return values;
  };

  // The coefficients are well balanced only when the circle passes near the
  // bulk of the roots. If the median root modulus is far from the radius,
  // resample there; a misplaced circle can push the leading coefficient of
  // a high-degree polynomial below the cutoff.
  Pass pass = interpolate(rho, samples);
  for (int attempt = 0; attempt < 3 && pass.degree > 0; ++attempt) {
    std::vector<double> mods;
    for (const Complex& r : pass.roots)
      if (std::abs(r) > 0.0 && std::isfinite(std::abs(r))) mods.push_back(std::abs(r));
    if (mods.empty()) break;
    std::nth_element(mods.begin(), mods.begin() + static_cast<std::ptrdiff_t>(mods.size() / 2), mods.end());
    const double target = mods[mods.size() / 2];
    if (std::abs(std::log(target / rho)) <= std::log(2.0)) break;
    rho = target;
    pass = interpolate(rho, sample(rho));
  }
  out.radius = rho;
  out.infinite_count = n - pass.degree;
  if (pass.degree == 0) return out;
  std::vector<Complex> roots = std::move(pass.roots);
  const std::vector<bool> is_real = std::move(pass.is_real);
  oracle_detail::polish_aberth(Acc, Ecc, roots, is_real, rho, opts.max_polish_iterations);
  // A root this far out is within rounding of an infinite eigenvalue.
  const double huge = ne > 0.0 ? opts.infinite_ratio * std::max(na, linalg::kEps) / ne
                               : std::numeric_limits<double>::infinity();
  for (const Complex& r : roots) {
    if (std::abs(r) > huge || !std::isfinite(std::abs(r)))
      ++out.infinite_count;
    else
      out.finite.push_back(r);
  }
  return out;
}

/// The spectrum as canonical pole pairs: infinite poles first, then one
/// entry per real eigenvalue and per conjugate pair (Im > 0 representative).
inline std::vector<PolePair> generalized_eig_oracle(const MatrixXd& Ac, const MatrixXd& Ec,
                                                    const OracleOptions& opts = {},
                                                    double real_tol = 1e-10) {
  const PencilSpectrum sp = pencil_spectrum(Ac, Ec, opts);
  std::vector<PolePair> out(static_cast<std::size_t>(sp.infinite_count), PolePair::infinite());
  for (const Complex& l : sp.finite) {
    if (std::abs(l.imag()) <= real_tol * std::abs(l))
      out.push_back(PolePair::real(l.real(), 1.0));
    else if (l.imag() > 0.0)
      out.push_back(PolePair::finite(l));
  }
  return out;
}

struct IndexCheck {
  bool regular = false;
  bool index_le_1 = false;
  Index finite_count = 0;
  Index rank_E = 0;
  bool finite_count_matches = false;
};

/// Regularity (oracle succeeds) and index <= 1 of a pencil: the number of
/// finite eigenvalues must equal rank(Ec) and [Ec, Ac N] must have full row
/// rank, N spanning N(Ec). `rank_rtol` is the relative singular-value cutoff.
/// Same check when the spectrum is already known (the pencil is regular).
inline IndexCheck index_check_with_spectrum(const MatrixXd& Ac, const MatrixXd& Ec, const PencilSpectrum& sp,
                                            Index expected_r, double rank_rtol = 1e-10) {
  IndexCheck out;
  const Index n = Ac.rows();
  out.regular = true;
  out.finite_count = static_cast<Index>(sp.finite.size());
  const auto policy = linalg::RankPolicy::relative_cutoff(rank_rtol);
  out.rank_E = linalg::numerical_rank(Ec, policy).rank;
  const MatrixXd N = linalg::orthonormal_null_basis(Ec, policy);
  MatrixXd stacked(n, n + N.cols());
  stacked << Ec, Ac * N;
  const Index full = linalg::numerical_rank(stacked, policy).rank;
  out.index_le_1 = out.finite_count == out.rank_E && full == n;
  out.finite_count_matches = out.finite_count == expected_r;
  return out;
}

inline IndexCheck index_and_regularity_check(const MatrixXd& Ac, const MatrixXd& Ec, Index expected_r,
                                             double rank_rtol = 1e-10, const OracleOptions& opts = {}) {
  PencilSpectrum sp;
  try {
    sp = pencil_spectrum(Ac, Ec, opts);
  } catch (const SingularPencil&) {
    return {};
  }
  return index_check_with_spectrum(Ac, Ec, sp, expected_r, rank_rtol);
}

}  // namespace drschur
