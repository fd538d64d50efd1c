#pragma once

// Dense matrix helpers shared by every module: Kronecker products, spectral
// radius, matrix exponential / zero-order hold, discrete Riccati solve and
// Markov-chain stationary distributions.
//
// Everything here is a pure function templated on the scalar type.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "vcincs/errors.hpp"

namespace vcincs {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) {
    throw std::invalid_argument(what);
  }
}

} // namespace detail

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

/// Kronecker product a (x) b.
template <typename DerivedA, typename DerivedB>
MatrixX<typename DerivedA::Scalar> kron(const Eigen::MatrixBase<DerivedA>& a,
                                        const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  detail::require(a.size() > 0 && b.size() > 0, "kron: empty operand");
  detail::require(a.allFinite() && b.allFinite(), "kron: non-finite entry");
  MatrixX<Scalar> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// Largest eigenvalue modulus of a general real square matrix.
template <typename Derived>
typename Derived::Scalar spectral_radius(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  detail::require(m.rows() == m.cols(), "spectral_radius: matrix is not square");
  detail::require(m.allFinite(), "spectral_radius: non-finite entry");
  if (m.rows() == 0) {
    return Scalar(0);
  }
  Eigen::EigenSolver<MatrixX<Scalar>> solver(m.eval(), /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("spectral_radius: eigenvalue iteration did not converge");
  }
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

/// Matrix exponential by scaling and squaring around a degree-13 Pade
/// approximant (Higham 2005 coefficients).
template <typename Derived>
MatrixX<typename Derived::Scalar> expm(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  using std::ceil;
  using std::log2;
  using std::max;
  detail::require(a.rows() == a.cols(), "expm: matrix is not square");
  detail::require(a.allFinite(), "expm: non-finite entry");

  const Eigen::Index n = a.rows();
  const MatrixX<Scalar> ident = MatrixX<Scalar>::Identity(n, n);
  if (n == 0) {
    return ident;
  }

  static constexpr double kTheta13 = 5.371920351148152;
  static constexpr double kCoeff[] = {64764752532480000.0,
                                      32382376266240000.0,
                                      7771770303897600.0,
                                      1187353796428800.0,
                                      129060195264000.0,
                                      10559470521600.0,
                                      670442572800.0,
                                      33522128640.0,
                                      1323241920.0,
                                      40840800.0,
                                      960960.0,
                                      16380.0,
                                      182.0,
                                      1.0};

  const Scalar norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > Scalar(kTheta13)) {
    squarings = static_cast<int>(max(Scalar(0), ceil(log2(norm1 / Scalar(kTheta13)))));
  }
  const MatrixX<Scalar> as = a / std::pow(Scalar(2), squarings);

  const MatrixX<Scalar> a2 = as * as;
  const MatrixX<Scalar> a4 = a2 * a2;
  const MatrixX<Scalar> a6 = a4 * a2;

  const MatrixX<Scalar> u_inner =
      Scalar(kCoeff[13]) * a6 + Scalar(kCoeff[11]) * a4 + Scalar(kCoeff[9]) * a2;
  const MatrixX<Scalar> u = as * (a6 * u_inner + Scalar(kCoeff[7]) * a6 +
                                  Scalar(kCoeff[5]) * a4 + Scalar(kCoeff[3]) * a2 +
                                  Scalar(kCoeff[1]) * ident);
  const MatrixX<Scalar> v_inner =
      Scalar(kCoeff[12]) * a6 + Scalar(kCoeff[10]) * a4 + Scalar(kCoeff[8]) * a2;
  const MatrixX<Scalar> v = a6 * v_inner + Scalar(kCoeff[6]) * a6 + Scalar(kCoeff[4]) * a4 +
                            Scalar(kCoeff[2]) * a2 + Scalar(kCoeff[0]) * ident;

  MatrixX<Scalar> result = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) {
    result = (result * result).eval();
  }
  return result;
}

/// Exact zero-order-hold discretization of x' = a_c x + b_c u with sample
/// time t_s. Returns (A_d, B_d).
template <typename DerivedA, typename DerivedB>
std::pair<MatrixX<typename DerivedA::Scalar>, MatrixX<typename DerivedA::Scalar>>
zoh_discretize(const Eigen::MatrixBase<DerivedA>& a_c, const Eigen::MatrixBase<DerivedB>& b_c,
               typename DerivedA::Scalar t_s) {
  using Scalar = typename DerivedA::Scalar;
  detail::require(a_c.rows() == a_c.cols(), "zoh_discretize: a_c is not square");
  detail::require(b_c.rows() == a_c.rows(), "zoh_discretize: b_c row count does not match a_c");
  detail::require(t_s > Scalar(0), "zoh_discretize: sample time must be positive");

  const Eigen::Index s = a_c.rows();
  const Eigen::Index n = b_c.cols();
  MatrixX<Scalar> block = MatrixX<Scalar>::Zero(s + n, s + n);
  block.topLeftCorner(s, s) = a_c * t_s;
  block.topRightCorner(s, n) = b_c * t_s;
  const MatrixX<Scalar> e = expm(block);
  return {e.topLeftCorner(s, s), e.topRightCorner(s, n)};
}

struct DareOptions {
  double tolerance = 1e-12;
  long max_iterations = 1'000'000;
};

/// Stabilizing solution of S = A'SA - A'SB (R + B'SB)^-1 B'SA + Q by
/// fixed-point (value) iteration from S0 = Q.
///
/// Convergence is declared when the Frobenius norm of the update falls
/// below tolerance * max(1, ||S||). Throws NumericalError when the
/// iteration cap is hit or the iterate blows up.
template <typename DA, typename DB, typename DQ, typename DR>
MatrixX<typename DA::Scalar> solve_dare(const Eigen::MatrixBase<DA>& a,
                                        const Eigen::MatrixBase<DB>& b,
                                        const Eigen::MatrixBase<DQ>& q,
                                        const Eigen::MatrixBase<DR>& r,
                                        const DareOptions& opts = {}) {
  using Scalar = typename DA::Scalar;
  const Eigen::Index s = a.rows();
  const Eigen::Index n = b.cols();
  detail::require(a.cols() == s, "solve_dare: A is not square");
  detail::require(b.rows() == s, "solve_dare: B row count does not match A");
  detail::require(q.rows() == s && q.cols() == s, "solve_dare: Q has wrong shape");
  detail::require(r.rows() == n && r.cols() == n, "solve_dare: R has wrong shape");
  detail::require(a.allFinite() && b.allFinite() && q.allFinite() && r.allFinite(),
                  "solve_dare: non-finite entry");
  detail::require((q - q.transpose()).cwiseAbs().maxCoeff() <=
                      Scalar(1e-9) * std::max(Scalar(1), q.cwiseAbs().maxCoeff()),
                  "solve_dare: Q is not symmetric");
  detail::require((r - r.transpose()).cwiseAbs().maxCoeff() <=
                      Scalar(1e-9) * std::max(Scalar(1), r.cwiseAbs().maxCoeff()),
                  "solve_dare: R is not symmetric");
  if (Eigen::LLT<MatrixX<Scalar>>(r.eval()).info() != Eigen::Success) {
    throw std::invalid_argument("solve_dare: R is not positive definite");
  }

  const MatrixX<Scalar> at = a.transpose();
  const MatrixX<Scalar> bt = b.transpose();
  MatrixX<Scalar> x = q;
  for (long it = 0; it < opts.max_iterations; ++it) {
    const MatrixX<Scalar> xb = x * b;
    const MatrixX<Scalar> gain_rhs = bt * x * a;
    const MatrixX<Scalar> inner = r + bt * xb;
    MatrixX<Scalar> next = at * x * a - (at * xb) * inner.ldlt().solve(gain_rhs) + q;
    next = (Scalar(0.5) * (next + next.transpose())).eval();
    if (!next.allFinite()) {
      throw NumericalError("solve_dare: iterate diverged (is (A, B) stabilizable?)");
    }
    const Scalar step = (next - x).stableNorm();
    x = std::move(next);
    if (step <= Scalar(opts.tolerance) * std::max(Scalar(1), x.stableNorm())) {
      return x;
    }
  }
  throw NumericalError("solve_dare: no convergence within " + std::to_string(opts.max_iterations) +
                       " iterations");
}

/// Residual S - (A'SA - A'SB (R + B'SB)^-1 B'SA + Q).
template <typename DA, typename DB, typename DQ, typename DR, typename DS>
MatrixX<typename DA::Scalar> dare_residual(const Eigen::MatrixBase<DA>& a,
                                           const Eigen::MatrixBase<DB>& b,
                                           const Eigen::MatrixBase<DQ>& q,
                                           const Eigen::MatrixBase<DR>& r,
                                           const Eigen::MatrixBase<DS>& s) {
  const auto bt = b.transpose();
  const MatrixX<typename DA::Scalar> inner = r + bt * s * b;
  return s - (a.transpose() * s * a -
              (a.transpose() * s * b) * inner.ldlt().solve((bt * s * a).eval()) + q);
}

/// Unique stationary distribution of a row-stochastic matrix.
///
/// Solves (P' - I) a = 0 together with 1'a = 1. Throws NumericalError when
/// the kernel of (P' - I) has dimension > 1 (several closed classes).
template <typename Derived>
VectorX<typename Derived::Scalar> stationary_distribution(const Eigen::MatrixBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = p.rows();
  detail::require(n > 0 && p.cols() == n, "stationary_distribution: matrix is not square");
  detail::require(p.allFinite(), "stationary_distribution: non-finite entry");
  detail::require(p.minCoeff() >= Scalar(-1e-12), "stationary_distribution: negative entry");
  detail::require((p.rowwise().sum().array() - Scalar(1)).abs().maxCoeff() <= Scalar(1e-9),
                  "stationary_distribution: matrix is not row-stochastic");

  const MatrixX<Scalar> generator = p.transpose() - MatrixX<Scalar>::Identity(n, n);
  Eigen::FullPivLU<MatrixX<Scalar>> lu(generator);
  lu.setThreshold(Scalar(1e-10));
  if (lu.dimensionOfKernel() > 1) {
    throw NumericalError("stationary_distribution: chain has " +
                         std::to_string(lu.dimensionOfKernel()) +
                         " stationary distributions; refusing to pick one");
  }

  MatrixX<Scalar> system(n + 1, n);
  system.topRows(n) = generator;
  system.row(n).setOnes();
  VectorX<Scalar> rhs = VectorX<Scalar>::Zero(n + 1);
  rhs(n) = Scalar(1);
  VectorX<Scalar> alpha = system.colPivHouseholderQr().solve(rhs);

  alpha = alpha.cwiseMax(Scalar(0));
  alpha /= alpha.sum();
  return alpha;
}

} // namespace vcincs
