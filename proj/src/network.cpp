#include "vcincs/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace vcincs {

DelayModel::DelayModel(std::vector<double> pmf, double loss_prob)
    : pmf_(std::move(pmf)), loss_prob_(loss_prob) {
  detail::require(!pmf_.empty(), "DelayModel: pmf is empty");
  for (double v : pmf_) {
    detail::require(std::isfinite(v) && v >= 0.0, "DelayModel: pmf entries must be >= 0");
  }
  const double total = std::accumulate(pmf_.begin(), pmf_.end(), 0.0);
  detail::require(std::abs(total - 1.0) <= 1e-9,
                  "DelayModel: pmf sums to " + std::to_string(total) + ", expected 1");
  detail::require(std::isfinite(loss_prob_) && loss_prob_ >= 0.0 && loss_prob_ <= 1.0,
                  "DelayModel: loss_prob must lie in [0, 1]");
  cdf_.resize(pmf_.size());
  std::partial_sum(pmf_.begin(), pmf_.end(), cdf_.begin());
  cdf_.back() = 1.0;
}

std::optional<int> DelayModel::sample_delay(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double loss_draw = uniform(rng);
  const double delay_draw = uniform(rng);
  if (loss_draw < loss_prob_) {
    return std::nullopt;
  }
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), delay_draw);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf_.begin(), max_delay()));
}

Vector truncated_weights(const DelayModel& model, int n_seq) {
  detail::require(n_seq >= 1, "truncated_weights: N must be >= 1");
  Vector q = Vector::Zero(n_seq + 2);
  const double keep = 1.0 - model.loss_prob();
  double head = 0.0;
  for (int i = 0; i <= n_seq; ++i) {
    if (i < static_cast<int>(model.pmf().size())) {
      q(i) = keep * model.pmf()[i];
    }
    head += q(i);
  }
  q(n_seq + 1) = std::max(0.0, 1.0 - head);
  return q;
}

} // namespace vcincs
