#pragma once

#include <random>
#include <utility>

#include "vcincs/numerics.hpp"

namespace vcincs {

/// Discrete linear plant x+ = A x + B u + w with w ~ N(0, noise_cov).
class PlantModel {
public:
  PlantModel(Matrix a, Matrix b, Matrix noise_cov);

  const Matrix& a() const { return a_; }
  const Matrix& b() const { return b_; }
  const Matrix& noise_cov() const { return noise_cov_; }
  // Square-root factor F with F F' = noise_cov.
  const Matrix& noise_factor() const { return noise_factor_; }

  Eigen::Index state_dim() const { return a_.rows(); }
  Eigen::Index input_dim() const { return b_.cols(); }

  /// A x + B u + w.
  Vector step(const Vector& x, const Vector& u, const Vector& w) const;

  /// One zero-mean Gaussian draw with covariance noise_cov. Always consumes
  /// exactly state_dim() standard normals from the generator.
  Vector sample_noise(std::mt19937_64& rng) const;

private:
  Matrix a_;
  Matrix b_;
  Matrix noise_cov_;
  Matrix noise_factor_;
};

struct PendulumParams {
  double cart_mass = 0.5;      // kg
  double pendulum_mass = 0.5;  // kg
  double cart_friction = 0.1;  // N/m/s
  double length_to_com = 0.3;  // m
  double inertia = 0.006;      // kg m^2
  double sampling_time = 0.01; // s
  double noise_std = 0.0;      // sigma_w on cart position and angle
  double gravity = 9.81;       // m/s^2

  void validate() const;
};

/// I (M + m) + M m l^2, the common denominator of the linearized cart-pole.
double pendulum_denominator(const PendulumParams& p);

/// Cart-pole linearized about the upright equilibrium, state
/// [cart position, cart velocity, angle, angular velocity], input force.
std::pair<Matrix, Matrix> pendulum_continuous(const PendulumParams& p);

/// ZOH-discretized pendulum with noise diag(s^2, 0, s^2, 0).
PlantModel pendulum_plant(const PendulumParams& p);

/// Weights used for the pendulum LQR design: Q = diag(5000, 0, 100, 0), R = 100.
Matrix pendulum_lqr_q();
Matrix pendulum_lqr_r();
/// Reference gain for the pendulum preset, for comparison only.
Vector pendulum_reference_gain();
/// Initial state [0, 0.2, 0.2, 0].
Vector pendulum_initial_state();

struct LqrDesign {
  Matrix q;
  Matrix r;
  Matrix gain;      // n x s, applied as u = gain * x
  Matrix riccati;   // stabilizing DARE solution
};

/// L = -(R + B'SB)^-1 B'SA, so that u = L x.
Matrix lqr_gain(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r);

LqrDesign design_lqr(const PlantModel& plant, const Matrix& q, const Matrix& r);

} // namespace vcincs
