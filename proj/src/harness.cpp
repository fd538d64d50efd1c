#include "vcincs/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <optional>
#include <stdexcept>
#include <thread>

#include "vcincs/vci_controller.hpp"

namespace vcincs {

std::string to_string(ControllerKind kind) {
  switch (kind) {
  case ControllerKind::Cs:
    return "cs";
  case ControllerKind::OlNcs:
    return "ol";
  case ControllerKind::VciStationary:
    return "vci";
  case ControllerKind::VciFiltered:
    return "vci-filtered";
  }
  return "unknown";
}

ControllerKind parse_controller_kind(const std::string& name) {
  if (name == "cs") return ControllerKind::Cs;
  if (name == "ol") return ControllerKind::OlNcs;
  if (name == "vci") return ControllerKind::VciStationary;
  if (name == "vci-filtered") return ControllerKind::VciFiltered;
  throw std::invalid_argument("unknown controller '" + name +
                              "' (expected cs, ol, vci or vci-filtered)");
}

void EpisodeConfig::validate() const {
  const Eigen::Index s = plant.state_dim();
  const Eigen::Index n = plant.input_dim();
  detail::require(horizon >= 1, "EpisodeConfig: horizon must be >= 1");
  detail::require(n_seq >= 1, "EpisodeConfig: N must be >= 1");
  detail::require(gain.rows() == n && gain.cols() == s, "EpisodeConfig: gain must be n x s");
  detail::require(default_input.size() == n, "EpisodeConfig: default input must have n entries");
  detail::require(x0.size() == s, "EpisodeConfig: initial state must have s entries");
  detail::require(cost_q.rows() == s && cost_q.cols() == s, "EpisodeConfig: cost Q must be s x s");
  detail::require(cost_r.rows() == n && cost_r.cols() == n, "EpisodeConfig: cost R must be n x n");
}

RngStreams::RngStreams(std::uint64_t seed) {
  const auto lo = static_cast<std::uint32_t>(seed & 0xffffffffu);
  const auto hi = static_cast<std::uint32_t>(seed >> 32);
  std::seed_seq noise_seq{lo, hi, 1u};
  std::seed_seq delay_seq{lo, hi, 2u};
  std::seed_seq ctrl_seq{lo, hi, 3u};
  noise.seed(noise_seq);
  delay.seed(delay_seq);
  controller.seed(ctrl_seq);
}

Packet ol_sequence(const Matrix& gain, const PlantModel& plant, const Vector& x_k, int n_seq,
                   long timestamp) {
  detail::require(gain.rows() == plant.input_dim() && gain.cols() == plant.state_dim(),
                  "ol_sequence: gain must be n x s");
  detail::require(x_k.size() == plant.state_dim(), "ol_sequence: state has wrong dimension");
  Packet packet;
  packet.timestamp = timestamp;
  packet.inputs.reserve(static_cast<std::size_t>(n_seq + 1));
  Vector x = x_k;
  for (int m = 0; m <= n_seq; ++m) {
    Vector u = gain * x;
    if (m < n_seq) {
      x = (plant.a() * x + plant.b() * u).eval();
    }
    packet.inputs.push_back(std::move(u));
  }
  return packet;
}

namespace {

double stage_cost(const Vector& x, const Vector& u, const Matrix& q, const Matrix& r) {
  return x.dot(q * x) + u.dot(r * u);
}

} // namespace

EpisodeResult run_episode(const EpisodeConfig& cfg) {
  cfg.validate();
  RngStreams streams(cfg.seed);
  const bool networked = cfg.kind != ControllerKind::Cs;
  const int n_seq = cfg.n_seq;

  std::optional<VciController> vci;
  if (cfg.kind == ControllerKind::VciStationary || cfg.kind == ControllerKind::VciFiltered) {
    const Matrix p = build_transition_matrix(truncated_weights(cfg.delay, n_seq));
    vci.emplace(cfg.plant, cfg.gain, p, n_seq, cfg.default_input,
                cfg.kind == ControllerKind::VciFiltered ? WeightMode::Filtered
                                                        : WeightMode::Stationary);
  }
  ActuatorBuffer buffer(n_seq, cfg.default_input);
  std::multimap<long, Packet> in_flight;

  EpisodeResult result;
  const auto horizon = static_cast<std::size_t>(cfg.horizon);
  result.states.reserve(horizon);
  result.inputs.reserve(horizon);
  result.thetas.reserve(horizon);
  result.step_costs.reserve(horizon);

  Vector x = cfg.x0;
  for (long k = 0; k < cfg.horizon; ++k) {
    // The delay draw happens for every controller so that all kinds see
    // identical network realizations.
    const std::optional<int> delay = cfg.delay.sample_delay(streams.delay);

    Vector u;
    int theta = 0;
    if (!networked) {
      u = cfg.gain * x;
    } else {
      Packet packet = vci ? vci->generate_sequence(x) : ol_sequence(cfg.gain, cfg.plant, x, n_seq, k);
      packet.timestamp = k;
      if (delay) {
        in_flight.emplace(k + *delay, std::move(packet));
      }
      const auto [first, last] = in_flight.equal_range(k);
      for (auto it = first; it != last; ++it) {
        buffer.offer_packet(it->second);
      }
      in_flight.erase(first, last);
      Actuation act = buffer.actuate(k);
      u = std::move(act.input);
      theta = act.age;
    }

    const Vector w = cfg.plant.sample_noise(streams.noise);
    const double c = stage_cost(x, u, cfg.cost_q, cfg.cost_r);
    result.states.push_back(x);
    result.inputs.push_back(u);
    result.thetas.push_back(theta);
    result.step_costs.push_back(c);
    result.cost += c;
    x = cfg.plant.step(x, u, w);
  }
  result.final_state = x;
  return result;
}

double quadratic_cost(const EpisodeResult& result, const Matrix& q, const Matrix& r) {
  detail::require(result.states.size() == result.inputs.size(),
                  "quadratic_cost: trajectory lengths differ");
  double total = 0.0;
  for (std::size_t k = 0; k < result.states.size(); ++k) {
    total += stage_cost(result.states[k], result.inputs[k], q, r);
  }
  return total;
}

std::vector<EpisodeResult> run_batch(const EpisodeConfig& cfg, int runs, unsigned workers) {
  detail::require(runs >= 1, "run_batch: runs must be >= 1");
  cfg.validate();
  std::vector<EpisodeResult> results(static_cast<std::size_t>(runs));
  if (workers == 0) {
    workers = std::max(1u, std::thread::hardware_concurrency());
  }
  workers = std::min<unsigned>(workers, static_cast<unsigned>(runs));

  auto work = [&](unsigned worker) {
    for (int r = static_cast<int>(worker); r < runs; r += static_cast<int>(workers)) {
      EpisodeConfig local = cfg;
      local.seed = run_seed(cfg.seed, static_cast<std::uint64_t>(r));
      results[static_cast<std::size_t>(r)] = run_episode(local);
    }
  };
  if (workers == 1) {
    work(0);
    return results;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          work(w);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
  return results;
}

CostSummary summarize_costs(ControllerKind kind, std::vector<double> costs) {
  detail::require(!costs.empty(), "summarize_costs: no runs");
  CostSummary out;
  out.kind = kind;
  const double n = static_cast<double>(costs.size());
  double sum = 0.0;
  for (double c : costs) {
    sum += c;
  }
  out.mean = sum / n;
  if (costs.size() > 1) {
    double ss = 0.0;
    for (double c : costs) {
      ss += (c - out.mean) * (c - out.mean);
    }
    out.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  out.costs = std::move(costs);
  return out;
}

std::vector<CostSummary> monte_carlo(const EpisodeConfig& cfg, const std::vector<ControllerKind>& kinds,
                                     int runs, unsigned workers) {
  std::vector<CostSummary> out;
  out.reserve(kinds.size());
  for (ControllerKind kind : kinds) {
    EpisodeConfig local = cfg;
    local.kind = kind;
    const auto batch = run_batch(local, runs, workers);
    std::vector<double> costs;
    costs.reserve(batch.size());
    for (const auto& r : batch) {
      costs.push_back(r.cost);
    }
    out.push_back(summarize_costs(kind, std::move(costs)));
  }
  return out;
}

namespace {

double normal_quantile(double p) {
  // Bisection on the normal CDF; plenty accurate for test thresholds.
  double lo = -40.0;
  double hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = 0.5 * std::erfc(-mid / std::sqrt(2.0));
    (cdf < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

} // namespace

double student_t_quantile(double confidence, int dof) {
  detail::require(confidence > 0.0 && confidence < 1.0, "student_t_quantile: confidence in (0,1)");
  detail::require(dof >= 1, "student_t_quantile: dof must be >= 1");
  // Cornish-Fisher expansion around the normal quantile (Abramowitz &
  // Stegun 26.7.5); error below 1e-3 for dof >= 5.
  const double z = normal_quantile(confidence);
  const double v = static_cast<double>(dof);
  const double z2 = z * z;
  const double g1 = (z2 * z + z) / 4.0;
  const double g2 = (5.0 * z2 * z2 * z + 16.0 * z2 * z + 3.0 * z) / 96.0;
  const double g3 = (3.0 * z2 * z2 * z2 * z + 19.0 * z2 * z2 * z + 17.0 * z2 * z - 15.0 * z) / 384.0;
  const double g4 = (79.0 * std::pow(z, 9) + 776.0 * std::pow(z, 7) + 1482.0 * std::pow(z, 5) -
                     1920.0 * z2 * z - 945.0 * z) /
                    92160.0;
  return z + g1 / v + g2 / (v * v) + g3 / (v * v * v) + g4 / (v * v * v * v);
}

PairedTest paired_one_sided(const std::vector<double>& a, const std::vector<double>& b,
                            double confidence) {
  detail::require(a.size() == b.size() && a.size() >= 2,
                  "paired_one_sided: need two equal-length samples of size >= 2");
  const double n = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mean += b[i] - a[i];
  }
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = b[i] - a[i] - mean;
    ss += d * d;
  }
  PairedTest t;
  t.mean_diff = mean;
  t.std_error = std::sqrt(ss / (n - 1.0) / n);
  t.critical = student_t_quantile(confidence, static_cast<int>(a.size()) - 1);
  if (t.std_error > 0.0) {
    t.t_stat = mean / t.std_error;
    t.significant = t.t_stat > t.critical;
  } else {
    t.t_stat = mean > 0.0 ? INFINITY : 0.0;
    t.significant = mean > 0.0;
  }
  return t;
}

} // namespace vcincs
