#pragma once

#include <optional>
#include <random>
#include <vector>

#include "vcincs/numerics.hpp"

namespace vcincs {

/// Controller-to-actuator link: i.i.d. per-packet delays drawn from `pmf`
/// over {0, 1, ..., pmf.size()-1} steps, with an independent loss event.
class DelayModel {
public:
  DelayModel(std::vector<double> pmf, double loss_prob);

  const std::vector<double>& pmf() const { return pmf_; }
  double loss_prob() const { return loss_prob_; }
  int max_delay() const { return static_cast<int>(pmf_.size()) - 1; }

  /// Delay in steps, or std::nullopt when the packet is lost. Always
  /// consumes two uniforms from the generator.
  std::optional<int> sample_delay(std::mt19937_64& rng) const;

private:
  std::vector<double> pmf_;
  std::vector<double> cdf_;
  double loss_prob_;
};

/// q_0..q_N = (1 - loss) pmf[i]; q_{N+1} collects losses and every delay
/// beyond N. Length N+2, sums to one.
Vector truncated_weights(const DelayModel& model, int n_seq);

} // namespace vcincs
