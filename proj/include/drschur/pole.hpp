#pragma once

// Homogeneous eigenvalue pairs (alpha, beta), lambda = alpha / beta.

#include <cmath>
#include <complex>
#include <vector>

#include "drschur/errors.hpp"
#include "drschur/linalg.hpp"

namespace drschur {

enum class PoleKind { Infinite, FiniteReal, FiniteComplex };

/// An eigenvalue stored as an ordered pair. Canonical form:
///   Infinite      -> (1, 0)
///   FiniteReal    -> real alpha, real nonzero beta
///   FiniteComplex -> one representative per conjugate pair, Im(alpha/beta) > 0
struct PolePair {
  Complex alpha{1.0, 0.0};
  Complex beta{0.0, 0.0};
  PoleKind kind = PoleKind::Infinite;

  static PolePair infinite() { return {}; }
  static PolePair real(double alpha, double beta) {
    return {Complex(alpha, 0.0), Complex(beta, 0.0), PoleKind::FiniteReal};
  }
  static PolePair finite(Complex lambda);

  bool is_infinite() const { return kind == PoleKind::Infinite; }
  bool is_complex() const { return kind == PoleKind::FiniteComplex; }
  /// Number of eigenvalues this entry stands for (2 for a conjugate pair).
  int multiplicity() const { return is_complex() ? 2 : 1; }
  Complex lambda() const { return alpha / beta; }
};

/// (a1, b1) ~ (a2, b2) iff a1 b2 = a2 b1, checked to a relative tolerance.
inline bool equivalent(const PolePair& p, const PolePair& q, double rtol = 1e-14) {
  const Complex lhs = p.alpha * q.beta;
  const Complex rhs = q.alpha * p.beta;
  const double scale = std::abs(p.alpha * q.beta) + std::abs(q.alpha * p.beta);
  return std::abs(lhs - rhs) <= rtol * scale;
}

/// Bring an arbitrary pair into canonical form. Pairs whose ratio has an
/// imaginary part below `real_tol * |lambda|` are treated as real.
inline PolePair canonicalize(Complex alpha, Complex beta, double real_tol = 0.0) {
  if (!std::isfinite(std::abs(alpha)) || !std::isfinite(std::abs(beta)))
    throw InvalidInput("pole pair has non-finite entries");
  if (alpha == 0.0 && beta == 0.0) throw InvalidInput("pole pair (0, 0) is not an eigenvalue");
  if (beta == 0.0) return PolePair::infinite();
  const Complex lambda = alpha / beta;
  if (std::abs(lambda.imag()) <= real_tol * std::abs(lambda)) {
    // Keep the caller's scaling when both parts are already real.
    if (alpha.imag() == 0.0 && beta.imag() == 0.0)
      return PolePair::real(alpha.real(), beta.real());
    return PolePair::real(lambda.real(), 1.0);
  }
  if (lambda.imag() < 0.0) {
    alpha = std::conj(alpha);
    beta = std::conj(beta);
  }
  return {alpha, beta, PoleKind::FiniteComplex};
}

inline PolePair PolePair::finite(Complex lambda) { return canonicalize(lambda, 1.0); }

/// Expand a pole list into the eigenvalues it represents (finite ones only);
/// conjugate pairs contribute both members.
inline std::vector<Complex> finite_eigenvalues(const std::vector<PolePair>& poles) {
  std::vector<Complex> out;
  for (const auto& p : poles) {
    if (p.is_infinite()) continue;
    const Complex l = p.lambda();
    if (p.is_complex()) {
      out.push_back(l);
      out.push_back(std::conj(l));
    } else {
      out.emplace_back(l.real(), 0.0);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Normalization used for the diagonal blocks of the Schur factors.

enum class CaseTag { Infinite, RealCase, ComplexAlphaDominant, ComplexBetaDominant };

/// eps1/eps2 are the diagonal entries of (S, T) for a 1x1 block. For a
/// complex pair, (eps1, eps2) = (1, sigma + i tau) when |alpha| >= |beta| and
/// (sigma~ + i tau~, 1) otherwise; `sigma`/`tau` hold whichever of the two
/// pairs applies.
struct NormalizedPole {
  Complex eps1{1.0, 0.0};
  Complex eps2{0.0, 0.0};
  double sigma = 0.0;
  double tau = 0.0;
  CaseTag tag = CaseTag::Infinite;

  bool alpha_dominant() const {
    return tag == CaseTag::ComplexAlphaDominant ||
           (tag == CaseTag::RealCase && std::abs(eps1) >= std::abs(eps2)) ||
           tag == CaseTag::Infinite;
  }
};

inline NormalizedPole normalize_pole(const PolePair& p) {
  if (p.alpha == 0.0 && p.beta == 0.0) throw InvalidInput("pole pair (0, 0) is not an eigenvalue");
  NormalizedPole out;
  switch (p.kind) {
    case PoleKind::Infinite:
      out.tag = CaseTag::Infinite;
      out.eps1 = 1.0;
      out.eps2 = 0.0;
      return out;
    case PoleKind::FiniteReal: {
      const double a = p.alpha.real();
      const double b = p.beta.real();
      const double h = std::hypot(a, b);
      out.tag = CaseTag::RealCase;
      out.eps1 = a / h;
      out.eps2 = b / h;
      return out;
    }
    case PoleKind::FiniteComplex: {
      const Complex a = p.alpha;
      const Complex b = p.beta;
      if (std::abs(a) >= std::abs(b)) {
        const Complex r = std::conj(a) * b / std::norm(a);
        out.tag = CaseTag::ComplexAlphaDominant;
        out.sigma = r.real();
        out.tau = r.imag();
        out.eps1 = 1.0;
        out.eps2 = r;
      } else {
        const Complex r = std::conj(b) * a / std::norm(b);
        out.tag = CaseTag::ComplexBetaDominant;
        out.sigma = r.real();
        out.tau = r.imag();
        out.eps1 = r;
        out.eps2 = 1.0;
      }
      if (out.tau == 0.0) throw InvalidInput("complex pole with vanishing imaginary part");
      return out;
    }
  }
  return out;
}

}  // namespace drschur
