#pragma once

// Sequence-based controller with virtual control inputs.
//
// The controller sends packets U_k = {u_{k|k}, ..., u_{k+N|k}}. Inputs that
// the actuator may still apply from earlier packets are modelled as a
// discrete mixture over the candidates u_{k+m|k-i} plus the default input,
// with weights given by the distribution of the buffer age theta. The age
// process is a Markov chain on {0, ..., N+1}.
//
// Past packets are tracked in eta, stacked as
//   [u_{k|k-1} ... u_{k+N-1|k-1} | u_{k|k-2} ... u_{k+N-2|k-2} | ... | u_{k|k-N}]
// i.e. block j (1-based) holds the N+1-j inputs of U_{k-j} that are still
// applicable at step k or later. eta has n N (N+1) / 2 entries.

#include <optional>
#include <span>
#include <vector>

#include "vcincs/actuator.hpp"
#include "vcincs/numerics.hpp"
#include "vcincs/plant.hpp"

namespace vcincs {

/// n N (N+1) / 2.
Eigen::Index eta_dim(Eigen::Index n, int n_seq);

/// Offset of entry `pos` (0-based) of block `block` (1-based) inside eta.
Eigen::Index eta_offset(Eigen::Index n, int n_seq, int block, int pos);

/// eta_{k+1} from eta_k and the packet just sent: every stored sequence
/// drops its current entry, the tail of U_k becomes block 1 and the last
/// block falls off.
Vector shift_eta(const Vector& eta, std::span<const Vector> packet, Eigen::Index n, int n_seq);

/// Age-chain transition matrix on {0, ..., N+1} from q (length N+2):
/// p(i, j) = q_j for j <= i, p(i, i+1) = 1 - sum_{r<=i} q_r, zero above.
Matrix build_transition_matrix(const Vector& q);

/// alpha_{k+m|k}: (P^m)' alpha_{k|k}, first N+2-m entries, renormalized.
Vector predict_weights(const Matrix& p, const Vector& alpha_kk, int m);

/// Weights alpha_{k+j|k} for j = 0..N-1 (one vector per prediction offset).
std::vector<Vector> weight_schedule(const Matrix& p, const Vector& alpha_kk, int n_seq);

/// Same as weight_schedule for a stationary alpha: truncation only, since
/// P' alpha = alpha.
std::vector<Vector> stationary_schedule(const Vector& alpha_inf, int n_seq);

/// sum_i alpha_i candidates_i + alpha_last u_d.
Vector expected_virtual_input(const Vector& alpha, std::span<const Vector> candidates,
                              const Vector& u_d);

/// One filter step on the age belief.
///
/// `belief` is the distribution of the age at the previous step,
/// `candidates[i]` the input applied at the previous step if the age was i
/// (length N+2, default input last). The belief is reweighted by the
/// Gaussian likelihood of x_now - A x_prev - B candidates[i] on the support
/// of the noise covariance, normalized by its sum, then pushed through P.
/// If every likelihood underflows the update is prediction-only.
Vector wonham_update(const Vector& belief, const Vector& x_now, const Vector& x_prev,
                     std::span<const Vector> candidates, const PlantModel& plant, const Matrix& p);

/// Posterior before the prediction step; exposed for testing.
Vector wonham_reweight(const Vector& belief, const Vector& x_now, const Vector& x_prev,
                       std::span<const Vector> candidates, const PlantModel& plant);

/// Packet entries for state x and stored tails eta:
///   u_{k|k} = L x,  E x_{k+m|k} = A E x_{k+m-1|k} + B E u^v_{k+m-1|k},
///   u_{k+m|k} = L E x_{k+m|k},  m = 1..N.
/// `schedule[j]` is alpha_{k+j|k}.
std::vector<Vector> compute_sequence(const Matrix& gain, const PlantModel& plant, const Vector& x,
                                     const Vector& eta, std::span<const Vector> schedule,
                                     const Vector& u_d, int n_seq);

enum class WeightMode { Stationary, Filtered };

class VciController {
public:
  VciController(PlantModel plant, Matrix gain, Matrix transition, int n_seq, Vector u_d,
                WeightMode mode = WeightMode::Stationary);

  /// Builds U_k for the measured state and advances eta (and the filter).
  Packet generate_sequence(const Vector& x_k);

  /// Replace the stored tails; used to seed an arbitrary augmented state.
  void set_eta(Vector eta);

  const Vector& eta() const { return eta_; }
  const Vector& alpha_inf() const { return alpha_inf_; }
  /// Current age belief alpha_{k|k} (filtered mode) or alpha_inf.
  const Vector& belief() const { return belief_; }
  const Matrix& transition() const { return transition_; }
  const Matrix& gain() const { return gain_; }
  int n_seq() const { return n_seq_; }
  WeightMode mode() const { return mode_; }

private:
  PlantModel plant_;
  Matrix gain_;
  Matrix transition_;
  int n_seq_;
  Vector u_d_;
  WeightMode mode_;
  Vector alpha_inf_;
  std::vector<Vector> stationary_weights_;

  long step_ = 0;
  Vector eta_;
  Vector belief_;
  std::optional<Vector> prev_x_;
  std::vector<Vector> prev_candidates_;
};

/// L~ with U_k = L~ [x; eta], built column by column from compute_sequence
/// with stationary weights. Requires u_d = 0.
Matrix build_augmented_gain(const PlantModel& plant, const Matrix& gain, const Vector& alpha_inf,
                            int n_seq, const Vector& u_d);

/// Packet entries stacked into one vector of length (N+1) n.
Vector stack_packet(std::span<const Vector> inputs);

} // namespace vcincs
