#include "vcincs/config.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace vcincs {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& reason) {
  throw ConfigError(field + ": " + reason);
}

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> known) {
  if (!obj.is_object()) {
    fail(where.empty() ? "<root>" : where, "expected an object");
  }
  const std::set<std::string> allowed(known.begin(), known.end());
  std::vector<std::string> unknown;
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) {
      unknown.push_back(key);
    }
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& k : unknown) {
      list += (list.empty() ? "" : ", ") + ("\"" + k + "\"");
    }
    fail(where.empty() ? "<root>" : where, "unknown key(s) " + list);
  }
}

std::string join(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

double read_number(const json& v, const std::string& field) {
  if (!v.is_number()) {
    fail(field, "expected a number");
  }
  const double x = v.get<double>();
  if (!std::isfinite(x)) {
    fail(field, "must be finite");
  }
  return x;
}

double read_positive(const json& v, const std::string& field) {
  const double x = read_number(v, field);
  if (!(x > 0.0)) {
    fail(field, "must be > 0");
  }
  return x;
}

int read_int(const json& v, const std::string& field, long lo, long hi) {
  if (!v.is_number_integer()) {
    fail(field, "expected an integer");
  }
  const long x = v.get<long>();
  if (x < lo || x > hi) {
    fail(field, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return static_cast<int>(x);
}

std::string read_string(const json& v, const std::string& field) {
  if (!v.is_string()) {
    fail(field, "expected a string");
  }
  return v.get<std::string>();
}

Vector read_vector(const json& v, const std::string& field) {
  if (!v.is_array() || v.empty()) {
    fail(field, "expected a non-empty array of numbers");
  }
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = read_number(v[i], field + "[" + std::to_string(i) + "]");
  }
  return out;
}

Matrix read_matrix(const json& v, const std::string& field) {
  if (!v.is_array() || v.empty()) {
    fail(field, "expected a non-empty array of rows");
  }
  const std::size_t rows = v.size();
  std::size_t cols = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (!v[i].is_array() || v[i].empty()) {
      fail(field, "row " + std::to_string(i) + " is not a non-empty array");
    }
    if (i == 0) {
      cols = v[i].size();
    } else if (v[i].size() != cols) {
      fail(field, "rows have different lengths");
    }
  }
  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          read_number(v[i][j], field + "[" + std::to_string(i) + "][" + std::to_string(j) + "]");
    }
  }
  return out;
}

json write_matrix(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back(m(i, j));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json write_vector(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back(v(i));
  }
  return out;
}

void require_square(const Matrix& m, Eigen::Index dim, const std::string& field) {
  if (m.rows() != dim || m.cols() != dim) {
    fail(field, "expected a " + std::to_string(dim) + " x " + std::to_string(dim) + " matrix");
  }
}

void require_symmetric(const Matrix& m, const std::string& field) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
    fail(field, "matrix must be symmetric");
  }
}

void parse_plant(const json& j, RunConfig& cfg) {
  const std::string where = "plant";
  reject_unknown(j, where, {"model", "pendulum", "a", "b", "noise_cov", "noise_std"});
  const std::string model = j.contains("model") ? read_string(j.at("model"), join(where, "model"))
                                                : std::string("pendulum");
  if (j.contains("noise_std")) {
    cfg.noise_std = read_number(j.at("noise_std"), join(where, "noise_std"));
    if (cfg.noise_std < 0.0) {
      fail(join(where, "noise_std"), "must be >= 0");
    }
  }
  if (model == "pendulum") {
    cfg.plant_source = PlantSource::Pendulum;
    for (const char* key : {"a", "b", "noise_cov"}) {
      if (j.contains(key)) {
        fail(join(where, key), "only allowed with model \"matrices\"");
      }
    }
    if (j.contains("pendulum")) {
      const auto& p = j.at("pendulum");
      const std::string pw = join(where, "pendulum");
      reject_unknown(p, pw,
                     {"cart_mass", "pendulum_mass", "cart_friction", "length_to_com", "inertia",
                      "sampling_time", "gravity"});
      auto& pp = cfg.pendulum;
      if (p.contains("cart_mass")) pp.cart_mass = read_positive(p.at("cart_mass"), join(pw, "cart_mass"));
      if (p.contains("pendulum_mass"))
        pp.pendulum_mass = read_positive(p.at("pendulum_mass"), join(pw, "pendulum_mass"));
      if (p.contains("cart_friction"))
        pp.cart_friction = read_positive(p.at("cart_friction"), join(pw, "cart_friction"));
      if (p.contains("length_to_com"))
        pp.length_to_com = read_positive(p.at("length_to_com"), join(pw, "length_to_com"));
      if (p.contains("inertia")) pp.inertia = read_positive(p.at("inertia"), join(pw, "inertia"));
      if (p.contains("sampling_time"))
        pp.sampling_time = read_positive(p.at("sampling_time"), join(pw, "sampling_time"));
      if (p.contains("gravity")) pp.gravity = read_positive(p.at("gravity"), join(pw, "gravity"));
    }
    cfg.pendulum.noise_std = cfg.noise_std;
  } else if (model == "matrices") {
    cfg.plant_source = PlantSource::Matrices;
    if (j.contains("pendulum")) {
      fail(join(where, "pendulum"), "only allowed with model \"pendulum\"");
    }
    if (!j.contains("a")) fail(join(where, "a"), "required for model \"matrices\"");
    if (!j.contains("b")) fail(join(where, "b"), "required for model \"matrices\"");
    cfg.a = read_matrix(j.at("a"), join(where, "a"));
    cfg.b = read_matrix(j.at("b"), join(where, "b"));
    if (cfg.a.rows() != cfg.a.cols()) fail(join(where, "a"), "must be square");
    if (cfg.b.rows() != cfg.a.rows()) fail(join(where, "b"), "must have as many rows as a");
    if (j.contains("noise_cov")) {
      cfg.noise_cov = read_matrix(j.at("noise_cov"), join(where, "noise_cov"));
      require_square(cfg.noise_cov, cfg.a.rows(), join(where, "noise_cov"));
      require_symmetric(cfg.noise_cov, join(where, "noise_cov"));
    }
  } else {
    fail(join(where, "model"), "expected \"pendulum\" or \"matrices\", got \"" + model + "\"");
  }
}

void parse_network(const json& j, RunConfig& cfg) {
  const std::string where = "network";
  reject_unknown(j, where, {"delay_pmf", "loss_prob"});
  if (!j.contains("delay_pmf")) {
    fail(join(where, "delay_pmf"), "required");
  }
  const Vector pmf = read_vector(j.at("delay_pmf"), join(where, "delay_pmf"));
  if (pmf.minCoeff() < 0.0) {
    fail(join(where, "delay_pmf"), "entries must be >= 0");
  }
  if (std::abs(pmf.sum() - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "probabilities sum to " << pmf.sum() << ", expected 1";
    fail(join(where, "delay_pmf"), os.str());
  }
  cfg.delay_pmf.assign(pmf.data(), pmf.data() + pmf.size());
  if (j.contains("loss_prob")) {
    cfg.loss_prob = read_number(j.at("loss_prob"), join(where, "loss_prob"));
    if (cfg.loss_prob < 0.0 || cfg.loss_prob > 1.0) {
      fail(join(where, "loss_prob"), "must lie in [0, 1]");
    }
  }
}

void parse_controller(const json& j, RunConfig& cfg) {
  const std::string where = "controller";
  reject_unknown(j, where, {"kind", "sequence_length", "weight_mode", "default_input"});
  std::string mode = "stationary";
  if (j.contains("weight_mode")) {
    mode = read_string(j.at("weight_mode"), join(where, "weight_mode"));
    if (mode != "stationary" && mode != "filtered") {
      fail(join(where, "weight_mode"), "expected \"stationary\" or \"filtered\"");
    }
  }
  if (j.contains("kind")) {
    const std::string kind = read_string(j.at("kind"), join(where, "kind"));
    try {
      cfg.controller = parse_controller_kind(kind);
    } catch (const std::invalid_argument& e) {
      fail(join(where, "kind"), e.what());
    }
  }
  if (cfg.controller == ControllerKind::VciStationary && mode == "filtered") {
    cfg.controller = ControllerKind::VciFiltered;
  }
  if (j.contains("sequence_length")) {
    cfg.n_seq = read_int(j.at("sequence_length"), join(where, "sequence_length"), 1, 64);
  }
  if (j.contains("default_input")) {
    cfg.default_input = read_vector(j.at("default_input"), join(where, "default_input"));
  }
}

void parse_weights(const json& j, const std::string& where, Matrix& q, Matrix& r) {
  reject_unknown(j, where, {"q", "r"});
  if (j.contains("q")) {
    q = read_matrix(j.at("q"), join(where, "q"));
    if (q.rows() != q.cols()) fail(join(where, "q"), "must be square");
    require_symmetric(q, join(where, "q"));
  }
  if (j.contains("r")) {
    r = read_matrix(j.at("r"), join(where, "r"));
    if (r.rows() != r.cols()) fail(join(where, "r"), "must be square");
    require_symmetric(r, join(where, "r"));
  }
}

void parse_simulation(const json& j, RunConfig& cfg) {
  const std::string where = "simulation";
  reject_unknown(j, where, {"horizon", "initial_state", "seed", "runs", "workers"});
  if (j.contains("horizon")) cfg.horizon = read_int(j.at("horizon"), join(where, "horizon"), 1, 100000000);
  if (j.contains("initial_state"))
    cfg.initial_state = read_vector(j.at("initial_state"), join(where, "initial_state"));
  if (j.contains("seed")) {
    const auto& v = j.at("seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      fail(join(where, "seed"), "expected a non-negative integer");
    }
    cfg.seed = v.get<std::uint64_t>();
  }
  if (j.contains("runs")) cfg.runs = read_int(j.at("runs"), join(where, "runs"), 1, 100000000);
  if (j.contains("workers"))
    cfg.workers = static_cast<unsigned>(read_int(j.at("workers"), join(where, "workers"), 0, 4096));
}

void check_consistency(const RunConfig& cfg) {
  const Eigen::Index s = cfg.plant_source == PlantSource::Pendulum ? 4 : cfg.a.rows();
  const Eigen::Index n = cfg.plant_source == PlantSource::Pendulum ? 1 : cfg.b.cols();
  if (cfg.design_q.size() == 0) fail("design.q", "required for model \"matrices\"");
  if (cfg.design_r.size() == 0) fail("design.r", "required for model \"matrices\"");
  require_square(cfg.design_q, s, "design.q");
  require_square(cfg.design_r, n, "design.r");
  if (cfg.cost_q.size() != 0) require_square(cfg.cost_q, s, "cost.q");
  if (cfg.cost_r.size() != 0) require_square(cfg.cost_r, n, "cost.r");
  if (cfg.default_input.size() != 0 && cfg.default_input.size() != n) {
    fail("controller.default_input", "expected " + std::to_string(n) + " entries");
  }
  if (cfg.initial_state.size() == 0) fail("simulation.initial_state", "required for model \"matrices\"");
  if (cfg.initial_state.size() != s) {
    fail("simulation.initial_state", "expected " + std::to_string(s) + " entries");
  }
}

} // namespace

RunConfig pendulum_preset() {
  RunConfig cfg;
  cfg.plant_source = PlantSource::Pendulum;
  cfg.design_q = pendulum_lqr_q();
  cfg.design_r = pendulum_lqr_r();
  cfg.initial_state = pendulum_initial_state();
  return cfg;
}

RunConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("<root>: invalid JSON: ") + e.what());
  }
  reject_unknown(root, "",
                 {"plant", "network", "controller", "design", "cost", "simulation", "stability",
                  "output"});

  RunConfig cfg;
  if (root.contains("plant")) {
    parse_plant(root.at("plant"), cfg);
  }
  if (cfg.plant_source == PlantSource::Pendulum) {
    cfg.design_q = pendulum_lqr_q();
    cfg.design_r = pendulum_lqr_r();
    cfg.initial_state = pendulum_initial_state();
  }
  if (!root.contains("network")) {
    fail("network", "required");
  }
  parse_network(root.at("network"), cfg);
  if (root.contains("controller")) parse_controller(root.at("controller"), cfg);
  if (root.contains("design")) parse_weights(root.at("design"), "design", cfg.design_q, cfg.design_r);
  if (root.contains("cost")) parse_weights(root.at("cost"), "cost", cfg.cost_q, cfg.cost_r);
  if (root.contains("simulation")) parse_simulation(root.at("simulation"), cfg);
  if (root.contains("stability")) {
    const auto& s = root.at("stability");
    reject_unknown(s, "stability", {"max_operator_dim"});
    if (s.contains("max_operator_dim")) {
      cfg.max_operator_dim = read_int(s.at("max_operator_dim"), "stability.max_operator_dim", 1, 1000000);
    }
  }
  if (root.contains("output")) {
    const auto& o = root.at("output");
    reject_unknown(o, "output", {"trajectory_csv", "summary_csv"});
    if (o.contains("trajectory_csv"))
      cfg.trajectory_csv = read_string(o.at("trajectory_csv"), "output.trajectory_csv");
    if (o.contains("summary_csv")) cfg.summary_csv = read_string(o.at("summary_csv"), "output.summary_csv");
  }
  check_consistency(cfg);
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(path.string() + ": cannot open config file");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

std::string serialize_config(const RunConfig& cfg, int indent) {
  json root;
  json plant;
  if (cfg.plant_source == PlantSource::Pendulum) {
    plant["model"] = "pendulum";
    plant["pendulum"] = {{"cart_mass", cfg.pendulum.cart_mass},
                         {"pendulum_mass", cfg.pendulum.pendulum_mass},
                         {"cart_friction", cfg.pendulum.cart_friction},
                         {"length_to_com", cfg.pendulum.length_to_com},
                         {"inertia", cfg.pendulum.inertia},
                         {"sampling_time", cfg.pendulum.sampling_time},
                         {"gravity", cfg.pendulum.gravity}};
  } else {
    plant["model"] = "matrices";
    plant["a"] = write_matrix(cfg.a);
    plant["b"] = write_matrix(cfg.b);
    if (cfg.noise_cov.size() != 0) {
      plant["noise_cov"] = write_matrix(cfg.noise_cov);
    }
  }
  plant["noise_std"] = cfg.noise_std;
  root["plant"] = plant;
  root["network"] = {{"delay_pmf", cfg.delay_pmf}, {"loss_prob", cfg.loss_prob}};

  const bool filtered = cfg.controller == ControllerKind::VciFiltered;
  json controller = {
      {"kind", filtered ? std::string("vci") : to_string(cfg.controller)},
      {"sequence_length", cfg.n_seq},
      {"weight_mode", filtered ? "filtered" : "stationary"}};
  if (cfg.default_input.size() != 0) {
    controller["default_input"] = write_vector(cfg.default_input);
  }
  root["controller"] = controller;
  root["design"] = {{"q", write_matrix(cfg.design_q)}, {"r", write_matrix(cfg.design_r)}};
  if (cfg.cost_q.size() != 0 || cfg.cost_r.size() != 0) {
    json cost = json::object();
    if (cfg.cost_q.size() != 0) cost["q"] = write_matrix(cfg.cost_q);
    if (cfg.cost_r.size() != 0) cost["r"] = write_matrix(cfg.cost_r);
    root["cost"] = cost;
  }
  root["simulation"] = {{"horizon", cfg.horizon},
                        {"initial_state", write_vector(cfg.initial_state)},
                        {"seed", cfg.seed},
                        {"runs", cfg.runs},
                        {"workers", cfg.workers}};
  root["stability"] = {{"max_operator_dim", cfg.max_operator_dim}};
  root["output"] = {{"trajectory_csv", cfg.trajectory_csv}, {"summary_csv", cfg.summary_csv}};
  return root.dump(indent);
}

PlantModel make_plant(const RunConfig& cfg) {
  if (cfg.plant_source == PlantSource::Pendulum) {
    PendulumParams p = cfg.pendulum;
    p.noise_std = cfg.noise_std;
    return pendulum_plant(p);
  }
  Matrix cov = cfg.noise_cov;
  if (cov.size() == 0) {
    cov = cfg.noise_std * cfg.noise_std * Matrix::Identity(cfg.a.rows(), cfg.a.rows());
  }
  return PlantModel(cfg.a, cfg.b, cov);
}

DelayModel make_delay_model(const RunConfig& cfg) { return DelayModel(cfg.delay_pmf, cfg.loss_prob); }

Matrix effective_cost_q(const RunConfig& cfg) { return cfg.cost_q.size() != 0 ? cfg.cost_q : cfg.design_q; }

Matrix effective_cost_r(const RunConfig& cfg) { return cfg.cost_r.size() != 0 ? cfg.cost_r : cfg.design_r; }

Vector effective_default_input(const RunConfig& cfg, Eigen::Index n) {
  return cfg.default_input.size() != 0 ? cfg.default_input : Vector(Vector::Zero(n));
}

double effective_noise_std(const RunConfig& cfg) {
  if (cfg.plant_source == PlantSource::Matrices && cfg.noise_cov.size() != 0) {
    return std::sqrt(std::max(0.0, cfg.noise_cov.diagonal().maxCoeff()));
  }
  return cfg.noise_std;
}

EpisodeConfig make_episode_config(const RunConfig& cfg, const PlantModel& plant, const Matrix& gain) {
  EpisodeConfig ep{plant,
                   make_delay_model(cfg),
                   gain,
                   cfg.controller,
                   cfg.n_seq,
                   effective_default_input(cfg, plant.input_dim()),
                   cfg.horizon,
                   cfg.initial_state,
                   effective_cost_q(cfg),
                   effective_cost_r(cfg),
                   cfg.seed};
  ep.validate();
  return ep;
}

} // namespace vcincs
