#include "vcincs/vci_controller.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace vcincs {

// Weight vectors are probabilities; anything below this is round-off.
constexpr double kMinRetainedMass = 1e-12;

Eigen::Index eta_dim(Eigen::Index n, int n_seq) { return n * n_seq * (n_seq + 1) / 2; }

Eigen::Index eta_offset(Eigen::Index n, int n_seq, int block, int pos) {
  // Blocks 1..block-1 hold N, N-1, ..., N+2-block entries.
  const Eigen::Index before = static_cast<Eigen::Index>(block - 1) * n_seq -
                              static_cast<Eigen::Index>(block - 1) * (block - 2) / 2;
  return n * (before + pos);
}

Vector shift_eta(const Vector& eta, std::span<const Vector> packet, Eigen::Index n, int n_seq) {
  detail::require(eta.size() == eta_dim(n, n_seq), "shift_eta: eta has wrong dimension");
  detail::require(static_cast<int>(packet.size()) == n_seq + 1, "shift_eta: packet length");
  Vector next(eta.size());
  for (int pos = 0; pos < n_seq; ++pos) {
    next.segment(eta_offset(n, n_seq, 1, pos), n) = packet[static_cast<std::size_t>(pos + 1)];
  }
  for (int block = 2; block <= n_seq; ++block) {
    const int len = n_seq + 1 - block;
    for (int pos = 0; pos < len; ++pos) {
      next.segment(eta_offset(n, n_seq, block, pos), n) =
          eta.segment(eta_offset(n, n_seq, block - 1, pos + 1), n);
    }
  }
  return next;
}

Matrix build_transition_matrix(const Vector& q) {
  const Eigen::Index states = q.size();
  detail::require(states >= 3, "build_transition_matrix: q must have length N+2 >= 3");
  detail::require(q.allFinite() && q.minCoeff() >= 0.0, "build_transition_matrix: q entries < 0");
  detail::require(std::abs(q.sum() - 1.0) <= 1e-9, "build_transition_matrix: q must sum to 1");

  Matrix p = Matrix::Zero(states, states);
  for (Eigen::Index i = 0; i < states; ++i) {
    double head = 0.0;
    for (Eigen::Index j = 0; j <= i; ++j) {
      p(i, j) = q(j);
      head += q(j);
    }
    if (i + 1 < states) {
      p(i, i + 1) = 1.0 - head;
    }
  }
  return p;
}

Vector predict_weights(const Matrix& p, const Vector& alpha_kk, int m) {
  const Eigen::Index states = p.rows();
  detail::require(p.cols() == states && alpha_kk.size() == states,
                  "predict_weights: alpha must have length N+2");
  detail::require(m >= 0 && m <= states - 2, "predict_weights: m must lie in [0, N]");
  if (m == 0) {
    return alpha_kk;
  }
  Vector predicted = alpha_kk;
  for (int i = 0; i < m; ++i) {
    predicted = (p.transpose() * predicted).eval();
  }
  Vector kept = predicted.head(states - m);
  const double mass = kept.sum();
  if (!(mass > kMinRetainedMass)) {
    throw NumericalError("predict_weights: retained probability mass is zero at m = " +
                         std::to_string(m));
  }
  return kept / mass;
}

std::vector<Vector> weight_schedule(const Matrix& p, const Vector& alpha_kk, int n_seq) {
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(n_seq));
  for (int j = 0; j < n_seq; ++j) {
    out.push_back(predict_weights(p, alpha_kk, j));
  }
  return out;
}

std::vector<Vector> stationary_schedule(const Vector& alpha_inf, int n_seq) {
  detail::require(alpha_inf.size() == n_seq + 2, "stationary_schedule: alpha must have length N+2");
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(n_seq));
  for (int j = 0; j < n_seq; ++j) {
    Vector kept = alpha_inf.head(n_seq + 2 - j);
    const double mass = kept.sum();
    if (!(mass > kMinRetainedMass)) {
      throw NumericalError("stationary_schedule: retained probability mass is zero");
    }
    out.push_back(j == 0 ? kept : Vector(kept / mass));
  }
  return out;
}

Vector expected_virtual_input(const Vector& alpha, std::span<const Vector> candidates,
                              const Vector& u_d) {
  detail::require(alpha.size() == static_cast<Eigen::Index>(candidates.size()) + 1,
                  "expected_virtual_input: alpha must have one more entry than candidates");
  Vector out = alpha(alpha.size() - 1) * u_d;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    detail::require(candidates[i].size() == u_d.size(),
                    "expected_virtual_input: candidate has wrong dimension");
    out += alpha(static_cast<Eigen::Index>(i)) * candidates[i];
  }
  return out;
}

namespace {

// Log-density of N(0, cov) restricted to the range of cov.
struct SupportGaussian {
  Matrix basis;     // s x r, orthonormal eigenvectors with positive eigenvalue
  Vector precision; // r inverse eigenvalues
  double log_norm = 0.0;

  explicit SupportGaussian(const Matrix& cov) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    const Vector& lambda = eig.eigenvalues();
    const double cutoff = 1e-12 * std::max(lambda.cwiseAbs().maxCoeff(), 0.0);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
      if (lambda(i) > cutoff && lambda(i) > 0.0) {
        keep.push_back(i);
      }
    }
    if (keep.empty()) {
      throw std::invalid_argument("wonham_update: process noise covariance is zero");
    }
    basis.resize(cov.rows(), static_cast<Eigen::Index>(keep.size()));
    precision.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) {
      const auto col = static_cast<Eigen::Index>(c);
      basis.col(col) = eig.eigenvectors().col(keep[c]);
      precision(col) = 1.0 / lambda(keep[c]);
      log_norm -= 0.5 * std::log(2.0 * std::numbers::pi * lambda(keep[c]));
    }
  }

  double log_density(const Vector& residual) const {
    const Vector z = basis.transpose() * residual;
    return log_norm - 0.5 * z.cwiseAbs2().dot(precision);
  }
};

} // namespace

Vector wonham_reweight(const Vector& belief, const Vector& x_now, const Vector& x_prev,
                       std::span<const Vector> candidates, const PlantModel& plant) {
  detail::require(belief.size() == static_cast<Eigen::Index>(candidates.size()),
                  "wonham_update: one candidate per age state required");
  detail::require(x_now.size() == plant.state_dim() && x_prev.size() == plant.state_dim(),
                  "wonham_update: state has wrong dimension");
  const SupportGaussian density(plant.noise_cov());
  const Vector drift = plant.a() * x_prev;

  Vector log_lik(belief.size());
  for (Eigen::Index i = 0; i < belief.size(); ++i) {
    const auto& u = candidates[static_cast<std::size_t>(i)];
    detail::require(u.size() == plant.input_dim(), "wonham_update: candidate has wrong dimension");
    log_lik(i) = density.log_density(x_now - drift - plant.b() * u);
  }
  const double peak = log_lik.maxCoeff();
  // All raw densities below the smallest normal double: no usable evidence.
  if (!std::isfinite(peak) || peak < std::log(std::numeric_limits<double>::min())) {
    return belief;
  }
  Vector posterior = belief.cwiseProduct((log_lik.array() - peak).exp().matrix());
  const double mass = posterior.sum();
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    return belief;
  }
  return posterior / mass;
}

Vector wonham_update(const Vector& belief, const Vector& x_now, const Vector& x_prev,
                     std::span<const Vector> candidates, const PlantModel& plant, const Matrix& p) {
  detail::require(p.rows() == belief.size() && p.cols() == belief.size(),
                  "wonham_update: transition matrix has wrong shape");
  const Vector posterior = wonham_reweight(belief, x_now, x_prev, candidates, plant);
  Vector predicted = p.transpose() * posterior;
  return predicted / predicted.sum();
}

std::vector<Vector> compute_sequence(const Matrix& gain, const PlantModel& plant, const Vector& x,
                                     const Vector& eta, std::span<const Vector> schedule,
                                     const Vector& u_d, int n_seq) {
  const Eigen::Index n = plant.input_dim();
  detail::require(gain.rows() == n && gain.cols() == plant.state_dim(),
                  "compute_sequence: gain must be n x s");
  detail::require(x.size() == plant.state_dim(), "compute_sequence: state has wrong dimension");
  detail::require(eta.size() == eta_dim(n, n_seq), "compute_sequence: eta has wrong dimension");
  detail::require(static_cast<int>(schedule.size()) >= n_seq,
                  "compute_sequence: weight schedule too short");
  detail::require(u_d.size() == n, "compute_sequence: default input has wrong dimension");

  std::vector<Vector> inputs;
  inputs.reserve(static_cast<std::size_t>(n_seq + 1));
  inputs.push_back(gain * x);

  Vector expected_x = x;
  std::vector<Vector> candidates;
  for (int m = 1; m <= n_seq; ++m) {
    const int j = m - 1;
    const Vector& alpha = schedule[static_cast<std::size_t>(j)];
    detail::require(alpha.size() == n_seq + 2 - j, "compute_sequence: weight vector length");
    candidates.clear();
    candidates.push_back(inputs[static_cast<std::size_t>(j)]);
    for (int i = 1; i <= n_seq - j; ++i) {
      candidates.push_back(eta.segment(eta_offset(n, n_seq, i, j), n));
    }
    const Vector expected_u = expected_virtual_input(alpha, candidates, u_d);
    expected_x = (plant.a() * expected_x + plant.b() * expected_u).eval();
    inputs.push_back(gain * expected_x);
  }
  return inputs;
}

VciController::VciController(PlantModel plant, Matrix gain, Matrix transition, int n_seq, Vector u_d,
                             WeightMode mode)
    : plant_(std::move(plant)),
      gain_(std::move(gain)),
      transition_(std::move(transition)),
      n_seq_(n_seq),
      u_d_(std::move(u_d)),
      mode_(mode) {
  detail::require(n_seq_ >= 1, "VciController: N must be >= 1");
  detail::require(transition_.rows() == n_seq_ + 2 && transition_.cols() == n_seq_ + 2,
                  "VciController: transition matrix must be (N+2) x (N+2)");
  detail::require(u_d_.size() == plant_.input_dim(), "VciController: default input dimension");
  alpha_inf_ = stationary_distribution(transition_);
  stationary_weights_ = stationary_schedule(alpha_inf_, n_seq_);
  eta_ = Vector::Zero(eta_dim(plant_.input_dim(), n_seq_));
  if (mode_ == WeightMode::Filtered) {
    // Nothing has been sent before step 0: the age is 0 if U_0 arrives at
    // once, otherwise the buffer is empty.
    belief_ = Vector::Zero(n_seq_ + 2);
    belief_(0) = transition_(0, 0);
    belief_(n_seq_ + 1) = 1.0 - transition_(0, 0);
  } else {
    belief_ = alpha_inf_;
  }
}

void VciController::set_eta(Vector eta) {
  detail::require(eta.size() == eta_.size(), "set_eta: wrong dimension");
  eta_ = std::move(eta);
}

Packet VciController::generate_sequence(const Vector& x_k) {
  const Eigen::Index n = plant_.input_dim();
  std::vector<Vector> inputs;
  if (mode_ == WeightMode::Filtered) {
    if (prev_x_) {
      belief_ = wonham_update(belief_, x_k, *prev_x_, prev_candidates_, plant_, transition_);
    }
    const auto schedule = weight_schedule(transition_, belief_, n_seq_);
    inputs = compute_sequence(gain_, plant_, x_k, eta_, schedule, u_d_, n_seq_);

    // Input applied at this step for each possible age.
    prev_candidates_.clear();
    prev_candidates_.push_back(inputs.front());
    for (int i = 1; i <= n_seq_; ++i) {
      prev_candidates_.push_back(eta_.segment(eta_offset(n, n_seq_, i, 0), n));
    }
    prev_candidates_.push_back(u_d_);
    prev_x_ = x_k;
  } else {
    inputs = compute_sequence(gain_, plant_, x_k, eta_, stationary_weights_, u_d_, n_seq_);
  }
  eta_ = shift_eta(eta_, inputs, n, n_seq_);
  Packet packet{step_, std::move(inputs)};
  ++step_;
  return packet;
}

Vector stack_packet(std::span<const Vector> inputs) {
  Eigen::Index total = 0;
  for (const auto& u : inputs) {
    total += u.size();
  }
  Vector out(total);
  Eigen::Index at = 0;
  for (const auto& u : inputs) {
    out.segment(at, u.size()) = u;
    at += u.size();
  }
  return out;
}

Matrix build_augmented_gain(const PlantModel& plant, const Matrix& gain, const Vector& alpha_inf,
                            int n_seq, const Vector& u_d) {
  detail::require(u_d.size() == plant.input_dim(), "build_augmented_gain: default input dimension");
  if (u_d.cwiseAbs().maxCoeff() != 0.0) {
    throw std::invalid_argument("build_augmented_gain: default input must be zero for a linear L~");
  }
  const Eigen::Index s = plant.state_dim();
  const Eigen::Index n = plant.input_dim();
  const Eigen::Index d = eta_dim(n, n_seq);
  const auto schedule = stationary_schedule(alpha_inf, n_seq);

  Matrix l_tilde(static_cast<Eigen::Index>(n_seq + 1) * n, s + d);
  Vector x = Vector::Zero(s);
  Vector eta = Vector::Zero(d);
  for (Eigen::Index c = 0; c < s + d; ++c) {
    if (c < s) {
      x(c) = 1.0;
    } else {
      eta(c - s) = 1.0;
    }
    l_tilde.col(c) = stack_packet(compute_sequence(gain, plant, x, eta, schedule, u_d, n_seq));
    if (c < s) {
      x(c) = 0.0;
    } else {
      eta(c - s) = 0.0;
    }
  }
  return l_tilde;
}

} // namespace vcincs
