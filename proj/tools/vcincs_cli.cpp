// Command-line front end: LQR design, mean-square stability, single
// episodes and Monte Carlo batches for sequence-based networked control.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vcincs/config.hpp"
#include "vcincs/harness.hpp"
#include "vcincs/network.hpp"
#include "vcincs/plant.hpp"
#include "vcincs/stability.hpp"
#include "vcincs/vci_controller.hpp"

namespace {

using namespace vcincs;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitCapacity = 4;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::optional<std::string> controller;
  std::optional<std::string> out;
};

RunConfig load(const Options& opt) {
  RunConfig cfg = opt.config.empty() ? pendulum_preset() : parse_config(opt.config);
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.runs) {
    if (*opt.runs < 1) throw ConfigError("--runs: must be >= 1");
    cfg.runs = *opt.runs;
  }
  if (opt.controller) {
    try {
      cfg.controller = parse_controller_kind(*opt.controller);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("--controller: ") + e.what());
    }
  }
  return cfg;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError(path + ": cannot open output file");
  }
  out << std::setprecision(17);
  return out;
}

void print_row(std::ostream& os, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    os << "  [";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      os << (j ? ", " : "") << m(i, j);
    }
    os << "]\n";
  }
}

int cmd_design(const Options& opt) {
  const RunConfig cfg = load(opt);
  const PlantModel plant = make_plant(cfg);
  const LqrDesign design = design_lqr(plant, cfg.design_q, cfg.design_r);
  const double radius = spectral_radius(Matrix(plant.a() + plant.b() * design.gain));

  std::cout << std::setprecision(6) << "gain L (u = L x):\n";
  print_row(std::cout, design.gain);
  std::cout << "closed-loop spectral radius: " << radius << "\n";
  if (cfg.plant_source == PlantSource::Pendulum && design.gain.rows() == 1) {
    const Vector ref = pendulum_reference_gain();
    std::cout << "reference gain: [" << ref.transpose() << "]\n";
    std::cout << "deviation (computed - reference): [" << (design.gain.row(0).transpose() - ref).transpose()
              << "]\n";
    std::cout << "deviation (-computed - reference): ["
              << (-design.gain.row(0).transpose() - ref).transpose() << "]\n";
  }
  if (opt.out) {
    auto out = open_out(*opt.out);
    out << "row";
    for (Eigen::Index j = 0; j < design.gain.cols(); ++j) out << ",l" << j + 1;
    out << "\n";
    for (Eigen::Index i = 0; i < design.gain.rows(); ++i) {
      out << i;
      for (Eigen::Index j = 0; j < design.gain.cols(); ++j) out << "," << design.gain(i, j);
      out << "\n";
    }
  }
  return 0;
}

int cmd_stability(const Options& opt) {
  const RunConfig cfg = load(opt);
  const PlantModel plant = make_plant(cfg);
  const Matrix gain = lqr_gain(plant.a(), plant.b(), cfg.design_q, cfg.design_r);
  const Vector u_d = effective_default_input(cfg, plant.input_dim());
  if (u_d.cwiseAbs().maxCoeff() != 0.0) {
    throw ConfigError("controller.default_input: stability analysis requires a zero default input");
  }
  const Vector q = truncated_weights(make_delay_model(cfg), cfg.n_seq);
  const Matrix p = build_transition_matrix(q);
  const Vector alpha = stationary_distribution(p);
  const Matrix l_tilde = build_augmented_gain(plant, gain, alpha, cfg.n_seq, u_d);
  const JumpLinearSystem sys = closed_loop_modes(plant, l_tilde, p, cfg.n_seq);
  const MssVerdict verdict = mss_check(sys, MssOptions{cfg.max_operator_dim});

  std::cout << std::setprecision(10);
  std::cout << "N: " << cfg.n_seq << "\n";
  std::cout << "truncated delay weights q: [" << q.transpose() << "]\n";
  std::cout << "stationary age distribution: [" << alpha.transpose() << "]\n";
  std::cout << "mode dimension: " << sys.mode_dim() << "\n";
  std::cout << "radius: " << verdict.radius << "\n";
  std::cout << "verdict: " << (verdict.is_mss ? "MSS" : "NOT MSS") << "\n";
  if (opt.out) {
    auto out = open_out(*opt.out);
    out << "n_seq,radius,is_mss\n" << cfg.n_seq << "," << verdict.radius << "," << (verdict.is_mss ? 1 : 0)
        << "\n";
  }
  return 0;
}

void write_trajectory_header(std::ostream& os, Eigen::Index s, Eigen::Index n) {
  os << "run,k";
  for (Eigen::Index i = 0; i < s; ++i) os << ",x" << i + 1;
  for (Eigen::Index i = 0; i < n; ++i) os << ",u" << i + 1;
  os << ",theta,step_cost\n";
}

void write_trajectory(std::ostream& os, int run, const EpisodeResult& r) {
  for (std::size_t k = 0; k < r.states.size(); ++k) {
    os << run << "," << k;
    for (Eigen::Index i = 0; i < r.states[k].size(); ++i) os << "," << r.states[k](i);
    for (Eigen::Index i = 0; i < r.inputs[k].size(); ++i) os << "," << r.inputs[k](i);
    os << "," << r.thetas[k] << "," << r.step_costs[k] << "\n";
  }
}

int cmd_simulate(const Options& opt) {
  const RunConfig cfg = load(opt);
  const PlantModel plant = make_plant(cfg);
  const Matrix gain = lqr_gain(plant.a(), plant.b(), cfg.design_q, cfg.design_r);
  const EpisodeConfig ep = make_episode_config(cfg, plant, gain);
  const EpisodeResult result = run_episode(ep);

  const std::string path = opt.out.value_or(cfg.trajectory_csv);
  auto out = open_out(path);
  write_trajectory_header(out, plant.state_dim(), plant.input_dim());
  write_trajectory(out, 0, result);
  std::cout << std::setprecision(10) << "controller: " << to_string(cfg.controller) << "\n"
            << "steps: " << result.states.size() << "\n"
            << "cost: " << result.cost << "\n"
            << "trajectory: " << path << "\n";
  return 0;
}

int cmd_montecarlo(const Options& opt) {
  const RunConfig cfg = load(opt);
  const PlantModel plant = make_plant(cfg);
  const Matrix gain = lqr_gain(plant.a(), plant.b(), cfg.design_q, cfg.design_r);
  const EpisodeConfig ep = make_episode_config(cfg, plant, gain);

  std::vector<ControllerKind> kinds;
  if (opt.controller) {
    kinds = {cfg.controller};
  } else {
    kinds = {ControllerKind::Cs, ControllerKind::VciStationary, ControllerKind::OlNcs};
    if (cfg.controller == ControllerKind::VciFiltered) {
      kinds.push_back(ControllerKind::VciFiltered);
    }
  }
  const auto summaries = monte_carlo(ep, kinds, cfg.runs, cfg.workers);

  const std::string path = opt.out.value_or(cfg.summary_csv);
  auto out = open_out(path);
  out << "controller,sigma_w,runs,mean_cost,std_error\n";
  std::cout << std::setprecision(6) << std::left;
  std::cout << std::setw(14) << "controller" << std::setw(14) << "mean_cost" << "std_error\n";
  for (const auto& s : summaries) {
    out << to_string(s.kind) << "," << effective_noise_std(cfg) << "," << s.costs.size() << "," << s.mean
        << "," << s.std_error << "\n";
    std::cout << std::setw(14) << to_string(s.kind) << std::setw(14) << s.mean << s.std_error << "\n";
  }
  if (summaries.size() >= 2 && cfg.runs >= 2) {
    for (std::size_t i = 0; i + 1 < summaries.size(); ++i) {
      for (std::size_t j = i + 1; j < summaries.size(); ++j) {
        const PairedTest t = paired_one_sided(summaries[i].costs, summaries[j].costs);
        std::cout << "paired " << to_string(summaries[j].kind) << " - " << to_string(summaries[i].kind)
                  << ": mean diff " << t.mean_diff << ", t = " << t.t_stat
                  << (t.significant ? " (significant at 95%)" : "") << "\n";
      }
    }
  }
  std::cout << "summary: " << path << "\n";
  return 0;
}

int cmd_pendulum(const Options& opt) {
  RunConfig cfg = pendulum_preset();
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.runs) cfg.runs = *opt.runs;
  if (opt.controller) cfg.controller = parse_controller_kind(*opt.controller);
  cfg.noise_std = 0.006;
  cfg.delay_pmf = {0.05, 0.15, 0.3, 0.3, 0.2};
  const std::string text = serialize_config(cfg);
  if (opt.out) {
    auto out = open_out(*opt.out);
    out << text << "\n";
  } else {
    std::cout << text << "\n";
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequence-based networked control with virtual control inputs"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub, bool with_config) {
    if (with_config) {
      sub->add_option("--config", opt.config, "JSON run configuration (defaults to the pendulum preset)");
    }
    sub->add_option("--seed", opt.seed, "Master seed (overrides the config)");
    sub->add_option("--runs", opt.runs, "Monte Carlo run count (overrides the config)");
    sub->add_option("--controller", opt.controller, "cs | ol | vci | vci-filtered");
    sub->add_option("--out", opt.out, "Output path");
  };

  auto* design = app.add_subcommand("design", "LQR gain from the plant and design weights");
  auto* stability = app.add_subcommand("stability", "Mean-square stability verdict of the VCI closed loop");
  auto* simulate = app.add_subcommand("simulate", "One episode, written as a trajectory CSV");
  auto* montecarlo = app.add_subcommand("montecarlo", "Paired Monte Carlo batch, per-controller cost CSV");
  auto* pendulum = app.add_subcommand("pendulum", "Emit the inverted-pendulum preset config");
  for (auto* sub : {design, stability, simulate, montecarlo}) {
    add_common(sub, true);
  }
  add_common(pendulum, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (design->parsed()) return cmd_design(opt);
    if (stability->parsed()) return cmd_stability(opt);
    if (simulate->parsed()) return cmd_simulate(opt);
    if (montecarlo->parsed()) return cmd_montecarlo(opt);
    if (pendulum->parsed()) return cmd_pendulum(opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return kExitCapacity;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
