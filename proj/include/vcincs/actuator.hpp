#pragma once

#include <optional>
#include <vector>

#include "vcincs/numerics.hpp"

namespace vcincs {

/// Time-stamped control sequence U_k = {u_{k|k}, ..., u_{k+N|k}}.
struct Packet {
  long timestamp = 0;
  std::vector<Vector> inputs;

  int n_seq() const { return static_cast<int>(inputs.size()) - 1; }
};

struct Actuation {
  Vector input;
  int age; // theta_k; N+1 means buffer empty or exhausted
};

/// Actuator-side buffer holding the newest packet seen so far.
class ActuatorBuffer {
public:
  ActuatorBuffer(int n_seq, Vector default_input);

  /// Keeps `p` iff the buffer is empty or p is strictly newer.
  bool offer_packet(const Packet& p);

  /// Input for step k and the age of the buffered sequence.
  Actuation actuate(long k) const;

  const std::optional<Packet>& held() const { return held_; }
  int n_seq() const { return n_seq_; }
  const Vector& default_input() const { return default_input_; }

private:
  int n_seq_;
  Vector default_input_;
  std::optional<Packet> held_;
};

} // namespace vcincs
