#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "vcincs/actuator.hpp"
#include "vcincs/network.hpp"
#include "vcincs/numerics.hpp"
#include "vcincs/plant.hpp"

namespace vcincs {

enum class ControllerKind { Cs, OlNcs, VciStationary, VciFiltered };

std::string to_string(ControllerKind kind);
/// Accepts "cs", "ol", "vci", "vci-filtered".
ControllerKind parse_controller_kind(const std::string& name);

struct EpisodeConfig {
  PlantModel plant;
  DelayModel delay;
  Matrix gain; // u = gain * x
  ControllerKind kind = ControllerKind::VciStationary;
  int n_seq = 1;
  Vector default_input;
  int horizon = 150;
  Vector x0;
  Matrix cost_q;
  Matrix cost_r;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpisodeResult {
  std::vector<Vector> states; // x_0 .. x_{K-1}
  std::vector<Vector> inputs; // applied u_0 .. u_{K-1}
  std::vector<int> thetas;    // actuator age per step (0 for CS)
  std::vector<double> step_costs;
  Vector final_state;         // x_K
  double cost = 0.0;
};

/// Independent generator streams derived from one episode seed.
struct RngStreams {
  std::mt19937_64 noise;
  std::mt19937_64 delay;
  std::mt19937_64 controller;

  explicit RngStreams(std::uint64_t seed);
};

/// Open-loop rollout packet: entry m is L (A + B L)^m x_k.
Packet ol_sequence(const Matrix& gain, const PlantModel& plant, const Vector& x_k, int n_seq,
                   long timestamp = 0);

/// Per step: controller sends, due packets are delivered, the actuator
/// applies its input, the plant advances with fresh noise.
EpisodeResult run_episode(const EpisodeConfig& cfg);

/// sum_k x_k' Q x_k + u_k' R u_k over the applied inputs.
double quadratic_cost(const EpisodeResult& result, const Matrix& q, const Matrix& r);

/// Seed of Monte Carlo run r.
inline std::uint64_t run_seed(std::uint64_t master, std::uint64_t r) { return master ^ r; }

/// Runs `runs` episodes of cfg with seeds run_seed(cfg.seed, r). Output
/// order is by run index regardless of `workers`.
std::vector<EpisodeResult> run_batch(const EpisodeConfig& cfg, int runs, unsigned workers = 0);

struct CostSummary {
  ControllerKind kind;
  std::vector<double> costs; // per run
  double mean = 0.0;
  double std_error = 0.0;
};

CostSummary summarize_costs(ControllerKind kind, std::vector<double> costs);

/// One batch per controller kind, all replaying the same noise and delay
/// realizations run by run.
std::vector<CostSummary> monte_carlo(const EpisodeConfig& cfg, const std::vector<ControllerKind>& kinds,
                                     int runs, unsigned workers = 0);

struct PairedTest {
  double mean_diff = 0.0; // mean of (b - a)
  double std_error = 0.0;
  double t_stat = 0.0;
  double critical = 0.0;  // one-sided Student t quantile
  bool significant = false;
};

/// One-sided paired t test of H1: mean(b - a) > 0.
PairedTest paired_one_sided(const std::vector<double>& a, const std::vector<double>& b,
                            double confidence = 0.95);

/// Upper quantile of Student's t with `dof` degrees of freedom.
double student_t_quantile(double confidence, int dof);

} // namespace vcincs
