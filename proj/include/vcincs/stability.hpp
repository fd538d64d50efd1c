#pragma once

// Closed loop of plant, network/actuator and the VCI controller as a
// Markov jump linear system psi_{k+1} = A~_{theta_k} psi_k + w~_k, and its
// mean-square stability test.

#include <utility>
#include <vector>

#include "vcincs/numerics.hpp"
#include "vcincs/plant.hpp"

namespace vcincs {

/// eta_{k+1} = F eta_k + G U_k. F is d x d, G is d x (N+1) n.
std::pair<Matrix, Matrix> build_shift_matrices(Eigen::Index n, int n_seq);

/// u_k = H_theta eta_k + J_theta U_k for age theta in [0, N+1].
std::pair<Matrix, Matrix> build_selection_matrices(Eigen::Index n, int n_seq, int theta);

struct JumpLinearSystem {
  std::vector<Matrix> modes; // A~_0 .. A~_{N+1}
  Matrix transition;         // (N+2) x (N+2)

  Eigen::Index mode_dim() const { return modes.empty() ? 0 : modes.front().rows(); }
  void validate() const;
};

/// A~_theta = [[A, B H_theta], [0, F]] + [[B J_theta], [G]] L~.
JumpLinearSystem closed_loop_modes(const PlantModel& plant, const Matrix& l_tilde,
                                   const Matrix& transition, int n_seq);

struct MssVerdict {
  double radius = 0.0;
  bool is_mss = false;
};

struct MssOptions {
  // Upper bound on (N+2) m^2, the order of the second-moment operator.
  Eigen::Index max_operator_dim = 3000;
};

/// Spectral radius of (P' (x) I_{m^2}) blockdiag(A~_i (x) A~_i).
MssVerdict mss_check(const JumpLinearSystem& sys, const MssOptions& opts = {});

/// The second-moment operator whose spectral radius decides MSS.
Matrix second_moment_operator(const JumpLinearSystem& sys);

enum class MomentTrend { Decays, Diverges, Inconclusive };

/// Iterates M_j(k+1) = sum_i p_ij A~_i M_i(k) A~_i' from M_i(0) = I and
/// reports whether the total trace drops below 1e-8 or exceeds 1e8.
MomentTrend moment_iteration_oracle(const JumpLinearSystem& sys, int steps);

} // namespace vcincs
