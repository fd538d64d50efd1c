#include "vcincs/actuator.hpp"

#include <stdexcept>
#include <string>

namespace vcincs {

ActuatorBuffer::ActuatorBuffer(int n_seq, Vector default_input)
    : n_seq_(n_seq), default_input_(std::move(default_input)) {
  detail::require(n_seq_ >= 0, "ActuatorBuffer: N must be >= 0");
  detail::require(default_input_.size() > 0, "ActuatorBuffer: default input is empty");
}

bool ActuatorBuffer::offer_packet(const Packet& p) {
  detail::require(static_cast<int>(p.inputs.size()) == n_seq_ + 1,
                  "offer_packet: packet must carry N+1 inputs");
  for (const auto& u : p.inputs) {
    detail::require(u.size() == default_input_.size(), "offer_packet: input has wrong dimension");
  }
  if (held_ && p.timestamp <= held_->timestamp) {
    return false;
  }
  held_ = p;
  return true;
}

Actuation ActuatorBuffer::actuate(long k) const {
  if (!held_) {
    return {default_input_, n_seq_ + 1};
  }
  if (k < held_->timestamp) {
    throw std::logic_error("actuate: step " + std::to_string(k) +
                           " precedes buffered packet timestamp " +
                           std::to_string(held_->timestamp));
  }
  const long age = k - held_->timestamp;
  if (age > n_seq_) {
    return {default_input_, n_seq_ + 1};
  }
  return {held_->inputs[static_cast<std::size_t>(age)], static_cast<int>(age)};
}

} // namespace vcincs
