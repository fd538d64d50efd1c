#include "vcincs/plant.hpp"

#include <cmath>
#include <stdexcept>

namespace vcincs {

namespace {

// Square-root factor of a symmetric PSD matrix via pivoted LDL'.
Matrix psd_factor(const Matrix& cov) {
  const Eigen::Index s = cov.rows();
  if (s == 0) {
    return cov;
  }
  const bool diagonal = (cov - Matrix(cov.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
  if (diagonal) {
    if (cov.diagonal().minCoeff() < 0.0) {
      throw NumericalError("noise covariance is indefinite (negative variance)");
    }
    return cov.diagonal().cwiseSqrt().asDiagonal();
  }
  Eigen::LDLT<Matrix> ldlt(cov);
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() < -1e-12 * scale) {
    throw NumericalError("noise covariance is indefinite (LDL' factorization failed)");
  }
  const Vector d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
  Matrix lower = ldlt.matrixL();
  Matrix factor = ldlt.transpositionsP().transpose() * (lower * d.asDiagonal());
  return factor;
}

} // namespace

PlantModel::PlantModel(Matrix a, Matrix b, Matrix noise_cov)
    : a_(std::move(a)), b_(std::move(b)), noise_cov_(std::move(noise_cov)) {
  detail::require(a_.rows() > 0 && a_.rows() == a_.cols(), "PlantModel: A must be square");
  detail::require(b_.rows() == a_.rows() && b_.cols() > 0, "PlantModel: B must have s rows");
  detail::require(noise_cov_.rows() == a_.rows() && noise_cov_.cols() == a_.rows(),
                  "PlantModel: noise covariance must be s x s");
  detail::require(a_.allFinite() && b_.allFinite() && noise_cov_.allFinite(),
                  "PlantModel: non-finite entry");
  detail::require((noise_cov_ - noise_cov_.transpose()).cwiseAbs().maxCoeff() <= 1e-12,
                  "PlantModel: noise covariance must be symmetric");
  noise_factor_ = psd_factor(noise_cov_);
}

Vector PlantModel::step(const Vector& x, const Vector& u, const Vector& w) const {
  detail::require(x.size() == state_dim(), "step: state has wrong dimension");
  detail::require(u.size() == input_dim(), "step: input has wrong dimension");
  detail::require(w.size() == state_dim(), "step: noise has wrong dimension");
  return a_ * x + b_ * u + w;
}

Vector PlantModel::sample_noise(std::mt19937_64& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(state_dim());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    z(i) = normal(rng);
  }
  return noise_factor_ * z;
}

void PendulumParams::validate() const {
  const bool ok = cart_mass > 0 && pendulum_mass > 0 && cart_friction > 0 && length_to_com > 0 &&
                  inertia > 0 && sampling_time > 0 && gravity > 0 && noise_std >= 0;
  if (!ok) {
    throw std::invalid_argument("PendulumParams: physical parameters must be positive");
  }
}

double pendulum_denominator(const PendulumParams& p) {
  const double m_cart = p.cart_mass;
  const double m = p.pendulum_mass;
  const double l = p.length_to_com;
  return p.inertia * (m_cart + m) + m_cart * m * l * l;
}

std::pair<Matrix, Matrix> pendulum_continuous(const PendulumParams& p) {
  p.validate();
  const double m_cart = p.cart_mass;
  const double m = p.pendulum_mass;
  const double b = p.cart_friction;
  const double l = p.length_to_com;
  const double inertia = p.inertia;
  const double g = p.gravity;
  const double den = pendulum_denominator(p);

  Matrix a_c = Matrix::Zero(4, 4);
  a_c(0, 1) = 1.0;
  a_c(1, 1) = -(inertia + m * l * l) * b / den;
  a_c(1, 2) = m * m * g * l * l / den;
  a_c(2, 3) = 1.0;
  a_c(3, 1) = -m * l * b / den;
  a_c(3, 2) = m * g * l * (m_cart + m) / den;

  Matrix b_c = Matrix::Zero(4, 1);
  b_c(1, 0) = (inertia + m * l * l) / den;
  b_c(3, 0) = m * l / den;
  return {a_c, b_c};
}

PlantModel pendulum_plant(const PendulumParams& p) {
  auto [a_c, b_c] = pendulum_continuous(p);
  auto [a_d, b_d] = zoh_discretize(a_c, b_c, p.sampling_time);
  const double var = p.noise_std * p.noise_std;
  Matrix cov = Matrix::Zero(4, 4);
  cov(0, 0) = var;
  cov(2, 2) = var;
  return PlantModel(std::move(a_d), std::move(b_d), std::move(cov));
}

Matrix pendulum_lqr_q() {
  Matrix q = Matrix::Zero(4, 4);
  q(0, 0) = 5000.0;
  q(2, 2) = 100.0;
  return q;
}

Matrix pendulum_lqr_r() { return Matrix::Constant(1, 1, 100.0); }

Vector pendulum_reference_gain() { return Vector{{-6.54, -5.50, 28.72, 5.50}}; }

Vector pendulum_initial_state() { return Vector{{0.0, 0.2, 0.2, 0.0}}; }

Matrix lqr_gain(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r) {
  const Matrix s = solve_dare(a, b, q, r);
  const Matrix bt_s = b.transpose() * s;
  return -(r + bt_s * b).ldlt().solve(bt_s * a);
}

LqrDesign design_lqr(const PlantModel& plant, const Matrix& q, const Matrix& r) {
  LqrDesign design;
  design.q = q;
  design.r = r;
  design.riccati = solve_dare(plant.a(), plant.b(), q, r);
  const Matrix bt_s = plant.b().transpose() * design.riccati;
  design.gain = -(r + bt_s * plant.b()).ldlt().solve(bt_s * plant.a());
  return design;
}

} // namespace vcincs
