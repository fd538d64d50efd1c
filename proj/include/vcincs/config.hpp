#pragma once

// JSON run configuration for the command-line tool. See docs/config.md for
// the schema.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vcincs/harness.hpp"
#include "vcincs/numerics.hpp"
#include "vcincs/plant.hpp"

namespace vcincs {

enum class PlantSource { Pendulum, Matrices };

struct RunConfig {
  PlantSource plant_source = PlantSource::Pendulum;
  PendulumParams pendulum;
  Matrix a;         // matrices source only
  Matrix b;         // matrices source only
  Matrix noise_cov; // matrices source only; empty means noise_std^2 I
  double noise_std = 0.0;

  std::vector<double> delay_pmf{1.0};
  double loss_prob = 0.0;

  ControllerKind controller = ControllerKind::VciStationary;
  int n_seq = 4;
  Vector default_input; // empty means zero

  Matrix design_q;
  Matrix design_r;
  Matrix cost_q; // empty means design_q
  Matrix cost_r; // empty means design_r

  int horizon = 150;
  Vector initial_state;
  std::uint64_t seed = 1;
  int runs = 100;
  unsigned workers = 0;

  Eigen::Index max_operator_dim = 3000;

  std::string trajectory_csv = "trajectory.csv";
  std::string summary_csv = "summary.csv";
};

RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text);
/// Fully explicit JSON (every default written out).
std::string serialize_config(const RunConfig& cfg, int indent = 2);
/// Pendulum preset with its standard design weights and initial state.
RunConfig pendulum_preset();

PlantModel make_plant(const RunConfig& cfg);
DelayModel make_delay_model(const RunConfig& cfg);
/// Effective cost weights (falls back to the design weights).
Matrix effective_cost_q(const RunConfig& cfg);
Matrix effective_cost_r(const RunConfig& cfg);
Vector effective_default_input(const RunConfig& cfg, Eigen::Index n);
/// Effective sigma_w reported in summaries.
double effective_noise_std(const RunConfig& cfg);

EpisodeConfig make_episode_config(const RunConfig& cfg, const PlantModel& plant, const Matrix& gain);

} // namespace vcincs
