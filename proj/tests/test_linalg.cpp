#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "drschur/linalg.hpp"
#include "drschur/oracle.hpp"
#include "drschur/pole.hpp"
#include "test_util.hpp"

using namespace drschur;

TEST(Qr, ReconstructsAndHasNonnegativeDiagonal) {
  std::mt19937_64 rng(3);
  const MatrixXd M = testutil::gaussian(7, 3, rng);
  const auto qr = linalg::qr_decompose(M);
  EXPECT_LT((qr.Q.transpose() * qr.Q - MatrixXd::Identity(7, 7)).norm(), 1e-14);
  MatrixXd R0 = MatrixXd::Zero(7, 3);
  R0.topRows(3) = qr.R;
  EXPECT_LT((qr.Q * R0 - M).norm(), 1e-13);
  for (Index i = 0; i < 3; ++i) EXPECT_GE(qr.R(i, i), 0.0);
}

TEST(Qr, RejectsWideAndNonFinite) {
  EXPECT_THROW(linalg::qr_decompose(MatrixXd::Ones(2, 3)), InvalidInput);
  MatrixXd M = MatrixXd::Ones(3, 2);
  M(1, 1) = std::nan("");
  EXPECT_THROW(linalg::qr_decompose(M), InvalidInput);
}

TEST(Rank, DefaultAndExplicitPolicies) {
  MatrixXd M = MatrixXd::Zero(3, 3);
  M.diagonal() << 1.0, 1e-6, 1e-20;
  EXPECT_EQ(linalg::numerical_rank(M).rank, 2);
  EXPECT_EQ(linalg::numerical_rank(M, linalg::RankPolicy::relative_cutoff(1e-5)).rank, 1);
  EXPECT_EQ(linalg::numerical_rank(M, linalg::RankPolicy::absolute_cutoff(0.0)).rank, 3);
  EXPECT_EQ(linalg::numerical_rank(MatrixXd(0, 4)).rank, 0);
}

TEST(NullBasis, OrthonormalAndAnnihilating) {
  std::mt19937_64 rng(5);
  const MatrixXd M = testutil::gaussian(3, 7, rng);
  const MatrixXd Z = linalg::orthonormal_null_basis(M);
  ASSERT_EQ(Z.cols(), 4);
  EXPECT_LT((M * Z).norm(), 1e-13);
  EXPECT_LT((Z.transpose() * Z - MatrixXd::Identity(4, 4)).norm(), 1e-13);
  EXPECT_EQ(linalg::orthonormal_null_basis(MatrixXd::Identity(3, 3)).cols(), 0);
  EXPECT_EQ(linalg::orthonormal_null_basis(MatrixXd(0, 3)).cols(), 3);
}

TEST(SymEig, SortedDescendingWithSignConvention) {
  MatrixXd H(2, 2);
  H << 2.0, 1.0, 1.0, 2.0;
  const auto e = linalg::sym_eig(H);
  EXPECT_NEAR(e.values(0), 3.0, 1e-14);
  EXPECT_NEAR(e.values(1), 1.0, 1e-14);
  EXPECT_GT(e.vectors(0, 0), 0.0);
  EXPECT_GT(e.vectors(0, 1), 0.0);
  H(0, 1) = 1.5;
  EXPECT_THROW(linalg::sym_eig(H), InvalidInput);
}

TEST(Jacobi, ExampleAngle) {
  VectorXd x(2), y(2);
  x << 1.0, 0.0;
  y << 1.0, 1.0;
  const auto rot = linalg::jacobi_orthogonalize(x, y);
  const double theta = 0.5 * std::atan(2.0);
  EXPECT_NEAR(rot.c, std::cos(theta), 1e-15);
  EXPECT_NEAR(rot.s, std::sin(theta), 1e-15);
  const VectorXd xt = rot.c * x - rot.s * y;
  const VectorXd yt = rot.s * x + rot.c * y;
  EXPECT_NEAR(xt.dot(yt), 0.0, 1e-15);
}

TEST(Jacobi, EqualNormsAndDependent) {
  VectorXd x(2), y(2);
  x << 1.0, 1.0;
  y << 1.0, -0.5;
  y *= std::sqrt(2.0) / y.norm();
  const auto rot = linalg::jacobi_orthogonalize(x, y);
  EXPECT_NEAR((rot.c * x - rot.s * y).dot(rot.s * x + rot.c * y), 0.0, 1e-14);
  EXPECT_THROW(linalg::jacobi_orthogonalize(x, 2.0 * x), InvalidInput);
}

TEST(Condition, IdentityAndScaledOrthogonal) {
  EXPECT_NEAR(linalg::condition_frobenius<double>(MatrixXd::Identity(3, 3)), 3.0, 1e-14);
  std::mt19937_64 rng(9);
  const MatrixXd Q = linalg::qr_decompose(testutil::gaussian(3, 3, rng)).Q;
  MatrixXd D = MatrixXd::Identity(3, 3);
  D(0, 0) = 2.0;
  EXPECT_NEAR(linalg::condition_frobenius<double>(D * Q), std::sqrt(13.5), 1e-13);
}

// ---------------------------------------------------------------------------

TEST(Pole, NormalizeReal) {
  const auto np = normalize_pole(PolePair::real(-1.0, 1.0));
  EXPECT_EQ(np.tag, CaseTag::RealCase);
  EXPECT_NEAR(np.eps1.real(), -1.0 / std::sqrt(2.0), 1e-16);
  EXPECT_NEAR(np.eps2.real(), 1.0 / std::sqrt(2.0), 1e-16);
}

TEST(Pole, NormalizeComplexAlphaDominant) {
  const auto np = normalize_pole(canonicalize({1.0, 1.0}, 1.0));
  // The representative stored has Im(lambda) > 0, i.e. alpha = 1 + i.
  EXPECT_EQ(np.tag, CaseTag::ComplexAlphaDominant);
  EXPECT_NEAR(np.sigma, 0.5, 1e-16);
  EXPECT_NEAR(np.tau, -0.5, 1e-16);
  const Complex ratio = Complex(1.0, 0.0) / Complex(1.0, 1.0);
  EXPECT_NEAR(std::abs(Complex(np.sigma, np.tau) - ratio), 0.0, 1e-14);
}

TEST(Pole, NormalizeComplexBetaDominantAndTie) {
  const PolePair p = canonicalize({0.5, 0.25}, 1.0);
  const auto np = normalize_pole(p);
  EXPECT_EQ(np.tag, CaseTag::ComplexBetaDominant);
  EXPECT_NEAR(std::abs(Complex(np.sigma, np.tau) - p.lambda()), 0.0, 1e-15);
  const auto tie = normalize_pole(canonicalize({0.0, 1.0}, 1.0));
  EXPECT_EQ(tie.tag, CaseTag::ComplexAlphaDominant);
}

TEST(Pole, InfiniteAndZeroPair) {
  EXPECT_EQ(normalize_pole(PolePair::infinite()).tag, CaseTag::Infinite);
  EXPECT_TRUE(canonicalize(3.0, 0.0).is_infinite());
  EXPECT_THROW(canonicalize(0.0, 0.0), InvalidInput);
}

TEST(Pole, EquivalenceAndConjugateRepresentative) {
  EXPECT_TRUE(equivalent(PolePair::real(2.0, 4.0), PolePair::real(1.0, 2.0)));
  EXPECT_FALSE(equivalent(PolePair::real(2.0, 4.0), PolePair::real(1.0, 3.0)));
  const PolePair p = canonicalize({1.0, -2.0}, 1.0);
  EXPECT_GT(p.lambda().imag(), 0.0);
  EXPECT_EQ(finite_eigenvalues({p}).size(), 2u);
}

TEST(Pole, RealRatioExact) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> N;
  for (int i = 0; i < 100; ++i) {
    const double a = N(rng), b = N(rng);
    const auto np = normalize_pole(PolePair::real(a, b));
    EXPECT_NEAR(np.eps1.real() / np.eps2.real(), a / b, 1e-15 * std::abs(a / b));
    EXPECT_NEAR(std::norm(np.eps1) + std::norm(np.eps2), 1.0, 1e-15);
  }
}

// ---------------------------------------------------------------------------

TEST(Oracle, DiagonalExamples) {
  MatrixXd Ac = MatrixXd::Zero(2, 2);
  Ac.diagonal() << 1.0, 2.0;
  auto sp = pencil_spectrum(Ac, MatrixXd::Identity(2, 2));
  ASSERT_EQ(sp.finite.size(), 2u);
  EXPECT_EQ(sp.infinite_count, 0);
  std::vector<double> re{sp.finite[0].real(), sp.finite[1].real()};
  std::sort(re.begin(), re.end());
  EXPECT_NEAR(re[0], 1.0, 1e-14);
  EXPECT_NEAR(re[1], 2.0, 1e-14);

  MatrixXd Ec = MatrixXd::Zero(2, 2);
  Ec(0, 0) = 1.0;
  sp = pencil_spectrum(MatrixXd::Identity(2, 2), Ec);
  ASSERT_EQ(sp.finite.size(), 1u);
  EXPECT_NEAR(std::abs(sp.finite[0] - 1.0), 0.0, 1e-14);
  EXPECT_EQ(sp.infinite_count, 1);
}

TEST(Oracle, MatchesInverseReduction) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; ++t) {
    const MatrixXd A = testutil::gaussian(3, 3, rng);
    const MatrixXd E = testutil::gaussian(3, 3, rng);
    const auto sp = pencil_spectrum(A, E);
    Eigen::EigenSolver<MatrixXd> es(E.inverse() * A);
    std::vector<Complex> ref(es.eigenvalues().data(), es.eigenvalues().data() + 3);
    EXPECT_LE(testutil::max_matched_relative_error(ref, sp.finite), 1e-8) << "trial " << t;
  }
}

TEST(Oracle, SingularPencil) {
  MatrixXd A = MatrixXd::Zero(2, 2), E = MatrixXd::Zero(2, 2);
  A(0, 0) = 1.0;
  E(0, 0) = 1.0;
  EXPECT_THROW(pencil_spectrum(A, E), SingularPencil);
  const auto ic = index_and_regularity_check(A, E, 1);
  EXPECT_FALSE(ic.regular);
}

TEST(Oracle, CanonicalPairs) {
  MatrixXd A(2, 2);
  A << 0.0, 1.0, -5.0, -2.0;  // eigenvalues -1 +- 2i
  const auto poles = generalized_eig_oracle(A, MatrixXd::Identity(2, 2));
  ASSERT_EQ(poles.size(), 1u);
  EXPECT_TRUE(poles[0].is_complex());
  EXPECT_NEAR(std::abs(poles[0].lambda() - Complex(-1.0, 2.0)), 0.0, 1e-13);
}

TEST(IndexCheck, IdentityAndNilpotent) {
  const auto ok = index_and_regularity_check(MatrixXd::Identity(3, 3) * 2.0, MatrixXd::Identity(3, 3), 3);
  EXPECT_TRUE(ok.regular);
  EXPECT_TRUE(ok.index_le_1);
  EXPECT_EQ(ok.finite_count, 3);
  EXPECT_TRUE(ok.finite_count_matches);

  MatrixXd N = MatrixXd::Zero(2, 2);
  N(0, 1) = 1.0;
  const auto bad = index_and_regularity_check(MatrixXd::Identity(2, 2), N, 0);
  EXPECT_TRUE(bad.regular);
  EXPECT_EQ(bad.finite_count, 0);
  EXPECT_FALSE(bad.index_le_1);
}
