#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>

#include "vcincs/numerics.hpp"

using namespace vcincs;

namespace {

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  return m;
}

const double kGolden = (1.0 + std::sqrt(5.0)) / 2.0;

} // namespace

TEST(Kron, IdentityTimesIdentity) {
  EXPECT_EQ(kron(Matrix::Identity(2, 2), Matrix::Identity(2, 2)), Matrix::Identity(4, 4));
}

TEST(Kron, ScalarScaling) {
  Matrix a(1, 1);
  a << 2;
  Matrix b(1, 2);
  b << 3, 4;
  Matrix expected(1, 2);
  expected << 6, 8;
  EXPECT_EQ(kron(a, b), expected);
}

TEST(Kron, BlockPermutation) {
  Matrix swap(2, 2);
  swap << 0, 1, 1, 0;
  Matrix expected = Matrix::Zero(4, 4);
  expected(0, 1) = expected(1, 0) = expected(2, 3) = expected(3, 2) = 1;
  EXPECT_EQ(kron(Matrix::Identity(2, 2), swap), expected);
}

TEST(Kron, MixedProductProperty) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_matrix(rng, 2, 3), c = random_matrix(rng, 3, 2);
    const Matrix b = random_matrix(rng, 3, 2), d = random_matrix(rng, 2, 4);
    const Matrix lhs = kron(a, b) * kron(c, d);
    const Matrix rhs = kron(Matrix(a * c), Matrix(b * d));
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Kron, RejectsEmpty) {
  EXPECT_THROW(kron(Matrix(0, 0), Matrix::Identity(2, 2)), std::invalid_argument);
}

TEST(SpectralRadius, Examples) {
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 0.5, -0.9;
  EXPECT_NEAR(spectral_radius(d), 0.9, 1e-12);

  Matrix rot(2, 2);
  rot << 0, 1, -1, 0;
  EXPECT_NEAR(spectral_radius(rot), 1.0, 1e-12);

  Matrix e = Matrix::Zero(2, 2);
  e.diagonal() << 2.0, 0.1;
  EXPECT_NEAR(spectral_radius(e), 2.0, 1e-12);
}

TEST(SpectralRadius, NonSquareThrows) {
  EXPECT_THROW(spectral_radius(Matrix::Zero(2, 3)), std::invalid_argument);
}

TEST(SpectralRadius, KronSquaresRadius) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix a = random_matrix(rng, 3, 3);
    const double r = spectral_radius(a);
    EXPECT_NEAR(spectral_radius(kron(a, a)), r * r, 1e-7 * std::max(1.0, r * r));
  }
}

TEST(Expm, MatchesEigenMatrixFunction) {
  std::mt19937_64 rng(17);
  for (double scale : {0.01, 0.5, 3.0, 20.0}) {
    const Matrix a = random_matrix(rng, 5, 5, scale);
    const Matrix ours = expm(a);
    const Matrix ref = a.exp();
    EXPECT_LT((ours - ref).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, ref.cwiseAbs().maxCoeff()))
        << "scale " << scale;
  }
}

TEST(Expm, ZeroIsIdentity) {
  EXPECT_LT((expm(Matrix::Zero(3, 3)) - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Zoh, NilpotentCase) {
  Matrix b(2, 1);
  b << 1.5, -2.0;
  const auto [ad, bd] = zoh_discretize(Matrix::Zero(2, 2), b, 0.01);
  EXPECT_LT((ad - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((bd - 0.01 * b).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Zoh, ScalarClosedForm) {
  const auto [ad, bd] = zoh_discretize(Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, 1.0), 1.0);
  EXPECT_NEAR(ad(0, 0), std::exp(-1.0), 1e-12);
  EXPECT_NEAR(bd(0, 0), 1.0 - std::exp(-1.0), 1e-12);
}

TEST(Zoh, SmallSampleTimeLimit) {
  std::mt19937_64 rng(3);
  const auto [ad, bd] = zoh_discretize(random_matrix(rng, 4, 4), random_matrix(rng, 4, 2), 1e-8);
  EXPECT_LT((ad - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT(bd.cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Zoh, RejectsBadInput) {
  EXPECT_THROW(zoh_discretize(Matrix::Zero(2, 2), Matrix::Zero(3, 1), 0.1), std::invalid_argument);
  EXPECT_THROW(zoh_discretize(Matrix::Zero(2, 2), Matrix::Zero(2, 1), 0.0), std::invalid_argument);
}

TEST(Dare, ScalarDeadbeat) {
  const Matrix one = Matrix::Ones(1, 1);
  const Matrix s = solve_dare(Matrix::Zero(1, 1), one, one, one);
  EXPECT_NEAR(s(0, 0), 1.0, 1e-12);
}

TEST(Dare, ScalarGoldenRatio) {
  const Matrix one = Matrix::Ones(1, 1);
  const Matrix s = solve_dare(one, one, one, one);
  EXPECT_NEAR(s(0, 0), kGolden, 1e-9);
}

TEST(Dare, DecoupledCopies) {
  const Matrix i2 = Matrix::Identity(2, 2);
  const Matrix s = solve_dare(i2, i2, i2, i2);
  EXPECT_LT((s - kGolden * i2).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Dare, RandomSystemsSymmetricPsdSmallResidual) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_matrix(rng, 3, 3, 0.6);
    const Matrix b = random_matrix(rng, 3, 2);
    const Matrix qh = random_matrix(rng, 3, 3);
    const Matrix q = qh * qh.transpose() + 0.1 * Matrix::Identity(3, 3);
    const Matrix r = Matrix::Identity(2, 2);
    const Matrix s = solve_dare(a, b, q, r);
    EXPECT_LT((s - s.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Matrix>(s).eigenvalues().minCoeff(), -1e-10);
    EXPECT_LT(dare_residual(a, b, q, r, s).norm(), 1e-8);
  }
}

TEST(Dare, UnstabilizablePairFails) {
  // Unstable mode that the input cannot reach.
  Matrix a = Matrix::Zero(2, 2);
  a.diagonal() << 2.0, 0.5;
  Matrix b(2, 1);
  b << 0.0, 1.0;
  DareOptions opts;
  opts.max_iterations = 2000;
  EXPECT_THROW(solve_dare(a, b, Matrix::Identity(2, 2), Matrix::Ones(1, 1), opts), NumericalError);
}

TEST(Stationary, IdentityIsNotUnique) {
  EXPECT_THROW(stationary_distribution(Matrix::Identity(2, 2)), NumericalError);
}

TEST(Stationary, IdenticalRows) {
  Matrix p(3, 3);
  p.rowwise() = Eigen::RowVector3d(0.5, 0.3, 0.2);
  const Vector a = stationary_distribution(p);
  EXPECT_NEAR(a(0), 0.5, 1e-12);
  EXPECT_NEAR(a(1), 0.3, 1e-12);
  EXPECT_NEAR(a(2), 0.2, 1e-12);
}

TEST(Stationary, HandSolvedChain) {
  Matrix p(3, 3);
  p << 0.5, 0.5, 0, 0.5, 0.3, 0.2, 0.5, 0.3, 0.2;
  const Vector a = stationary_distribution(p);
  EXPECT_NEAR(a(0), 0.5, 1e-12);
  EXPECT_NEAR(a(1), 0.4, 1e-12);
  EXPECT_NEAR(a(2), 0.1, 1e-12);
}

TEST(Stationary, RandomChainsAreFixedPointsOnSimplex) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix p(5, 5);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = u(rng);
    p = p.array().colwise() / p.rowwise().sum().array();
    const Vector a = stationary_distribution(p);
    EXPECT_LT((p.transpose() * a - a).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(a.sum(), 1.0, 1e-12);
    EXPECT_GE(a.minCoeff(), 0.0);
  }
}

TEST(Stationary, RejectsNonStochastic) {
  Matrix p(2, 2);
  p << 0.5, 0.4, 0.5, 0.5;
  EXPECT_THROW(stationary_distribution(p), std::invalid_argument);
}
