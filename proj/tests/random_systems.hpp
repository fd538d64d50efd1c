#pragma once

// Random small closed loops shared by the unit and acceptance tests.

#include <random>

#include "vcincs/network.hpp"
#include "vcincs/stability.hpp"
#include "vcincs/vci_controller.hpp"

namespace vcincs::testing {

struct RandomLoop {
  JumpLinearSystem sys;
  int n_seq = 1;
  Eigen::Index s = 1;
};

inline Vector random_delay_weights(std::mt19937_64& rng, int n_seq) {
  std::exponential_distribution<double> e(1.0);
  Vector q(n_seq + 2);
  for (Eigen::Index i = 0; i < q.size(); ++i) q(i) = e(rng);
  q(0) += 0.1 * q.sum();
  return q / q.sum();
}

/// s in {1, 2}, n = 1, N in {1, 2}; plant and gain entries drawn so that
/// both stable and unstable closed loops are common.
inline RandomLoop random_loop(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(1, 2);
  std::normal_distribution<double> nd(0.0, 0.7);
  RandomLoop out;
  out.s = pick(rng);
  out.n_seq = pick(rng);
  Matrix a(out.s, out.s), b(out.s, 1), l(1, out.s);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = nd(rng);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = nd(rng);
  for (Eigen::Index i = 0; i < l.size(); ++i) l.data()[i] = nd(rng);
  const PlantModel plant(a, b, Matrix::Zero(out.s, out.s));
  const Matrix p = build_transition_matrix(random_delay_weights(rng, out.n_seq));
  const Vector alpha = stationary_distribution(p);
  const Matrix lt = build_augmented_gain(plant, l, alpha, out.n_seq, Vector::Zero(1));
  out.sys = closed_loop_modes(plant, lt, p, out.n_seq);
  return out;
}

} // namespace vcincs::testing
