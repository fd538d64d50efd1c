#include "vcincs/stability.hpp"

#include <stdexcept>
#include <string>

#include "vcincs/vci_controller.hpp"

namespace vcincs {

std::pair<Matrix, Matrix> build_shift_matrices(Eigen::Index n, int n_seq) {
  detail::require(n >= 1 && n_seq >= 1, "build_shift_matrices: need n >= 1 and N >= 1");
  const Eigen::Index d = eta_dim(n, n_seq);
  Matrix f = Matrix::Zero(d, d);
  Matrix g = Matrix::Zero(d, static_cast<Eigen::Index>(n_seq + 1) * n);
  const Matrix id = Matrix::Identity(n, n);

  // Block 1 of eta_{k+1} is u_{k+1|k} .. u_{k+N|k}.
  for (int pos = 0; pos < n_seq; ++pos) {
    g.block(eta_offset(n, n_seq, 1, pos), static_cast<Eigen::Index>(pos + 1) * n, n, n) = id;
  }
  // Block b of eta_{k+1} is block b-1 of eta_k without its first entry.
  for (int block = 2; block <= n_seq; ++block) {
    for (int pos = 0; pos < n_seq + 1 - block; ++pos) {
      f.block(eta_offset(n, n_seq, block, pos), eta_offset(n, n_seq, block - 1, pos + 1), n, n) = id;
    }
  }
  return {f, g};
}

std::pair<Matrix, Matrix> build_selection_matrices(Eigen::Index n, int n_seq, int theta) {
  detail::require(n >= 1 && n_seq >= 1, "build_selection_matrices: need n >= 1 and N >= 1");
  if (theta < 0 || theta > n_seq + 1) {
    throw std::out_of_range("build_selection_matrices: theta " + std::to_string(theta) +
                            " outside [0, N+1]");
  }
  Matrix h = Matrix::Zero(n, eta_dim(n, n_seq));
  Matrix j = Matrix::Zero(n, static_cast<Eigen::Index>(n_seq + 1) * n);
  if (theta == 0) {
    j.leftCols(n).setIdentity();
  } else if (theta <= n_seq) {
    h.middleCols(eta_offset(n, n_seq, theta, 0), n).setIdentity();
  }
  return {h, j};
}

void JumpLinearSystem::validate() const {
  detail::require(!modes.empty(), "JumpLinearSystem: no modes");
  const Eigen::Index m = modes.front().rows();
  for (const auto& mode : modes) {
    detail::require(mode.rows() == m && mode.cols() == m,
                    "JumpLinearSystem: modes must be square and of equal size");
  }
  detail::require(transition.rows() == static_cast<Eigen::Index>(modes.size()) &&
                      transition.cols() == transition.rows(),
                  "JumpLinearSystem: transition matrix does not match mode count");
}

JumpLinearSystem closed_loop_modes(const PlantModel& plant, const Matrix& l_tilde,
                                   const Matrix& transition, int n_seq) {
  const Eigen::Index s = plant.state_dim();
  const Eigen::Index n = plant.input_dim();
  const Eigen::Index d = eta_dim(n, n_seq);
  detail::require(l_tilde.rows() == static_cast<Eigen::Index>(n_seq + 1) * n &&
                      l_tilde.cols() == s + d,
                  "closed_loop_modes: L~ must be (N+1)n x (s+d)");
  detail::require(transition.rows() == n_seq + 2 && transition.cols() == n_seq + 2,
                  "closed_loop_modes: transition matrix must be (N+2) x (N+2)");

  const auto [f, g] = build_shift_matrices(n, n_seq);
  JumpLinearSystem sys;
  sys.transition = transition;
  for (int theta = 0; theta <= n_seq + 1; ++theta) {
    const auto [h, j] = build_selection_matrices(n, n_seq, theta);
    Matrix open = Matrix::Zero(s + d, s + d);
    open.topLeftCorner(s, s) = plant.a();
    open.topRightCorner(s, d) = plant.b() * h;
    open.bottomRightCorner(d, d) = f;
    Matrix input(s + d, l_tilde.rows());
    input.topRows(s) = plant.b() * j;
    input.bottomRows(d) = g;
    sys.modes.push_back(open + input * l_tilde);
  }
  return sys;
}

Matrix second_moment_operator(const JumpLinearSystem& sys) {
  sys.validate();
  const Eigen::Index modes = static_cast<Eigen::Index>(sys.modes.size());
  const Eigen::Index m2 = sys.mode_dim() * sys.mode_dim();

  // (P' (x) I) blockdiag(K_i): block (j, i) is p_ij K_i.
  std::vector<Matrix> squares;
  squares.reserve(sys.modes.size());
  for (const auto& mode : sys.modes) {
    squares.push_back(kron(mode, mode));
  }
  Matrix op = Matrix::Zero(modes * m2, modes * m2);
  for (Eigen::Index j = 0; j < modes; ++j) {
    for (Eigen::Index i = 0; i < modes; ++i) {
      const double p_ij = sys.transition(i, j);
      if (p_ij != 0.0) {
        op.block(j * m2, i * m2, m2, m2) = p_ij * squares[static_cast<std::size_t>(i)];
      }
    }
  }
  return op;
}

MssVerdict mss_check(const JumpLinearSystem& sys, const MssOptions& opts) {
  sys.validate();
  const Eigen::Index order =
      static_cast<Eigen::Index>(sys.modes.size()) * sys.mode_dim() * sys.mode_dim();
  if (order > opts.max_operator_dim) {
    throw CapacityError("mss_check: second-moment operator would be " + std::to_string(order) +
                        " x " + std::to_string(order) + ", above the cap of " +
                        std::to_string(opts.max_operator_dim));
  }
  MssVerdict verdict;
  verdict.radius = spectral_radius(second_moment_operator(sys));
  verdict.is_mss = verdict.radius < 1.0;
  return verdict;
}

MomentTrend moment_iteration_oracle(const JumpLinearSystem& sys, int steps) {
  sys.validate();
  detail::require(steps >= 100, "moment_iteration_oracle: need at least 100 steps");
  const std::size_t modes = sys.modes.size();
  const Eigen::Index m = sys.mode_dim();
  std::vector<Matrix> moments(modes, Matrix::Identity(m, m));
  std::vector<Matrix> next(modes, Matrix::Zero(m, m));

  for (int k = 0; k < steps; ++k) {
    for (auto& mj : next) {
      mj.setZero();
    }
    for (std::size_t i = 0; i < modes; ++i) {
      const Matrix propagated = sys.modes[i] * moments[i] * sys.modes[i].transpose();
      for (std::size_t j = 0; j < modes; ++j) {
        const double p_ij = sys.transition(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (p_ij != 0.0) {
          next[j] += p_ij * propagated;
        }
      }
    }
    std::swap(moments, next);
    double trace = 0.0;
    for (const auto& mj : moments) {
      trace += mj.trace();
    }
    if (!(trace <= 1e8)) {
      return MomentTrend::Diverges;
    }
    if (trace < 1e-8) {
      return MomentTrend::Decays;
    }
  }
  return MomentTrend::Inconclusive;
}

} // namespace vcincs
