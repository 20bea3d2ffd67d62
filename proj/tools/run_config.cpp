#include "run_config.hpp"

#include <cstdlib>
#include <fstream>

namespace trajopt::cli {

SolverConfig RunConfig::solver_config() const {
  SolverConfig config;
  config.max_iterations = max_iter;
  config.tolerance = eps;
  config.gamma0 = gamma0;
  config.shrink = rho;
  config.seed = seed;
  config.burn_in = burn_in;
  return config;
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream file(path);
  if (!file) throw std::runtime_error("cannot open config file " + path);
  nlohmann::json doc;
  file >> doc;

  config.env = doc.value("env", config.env);
  if (doc.contains("solver")) config.solvers = {doc["solver"].get<std::string>()};
  if (doc.contains("solvers")) {
    config.solvers = doc["solvers"].get<std::vector<std::string>>();
  }
  config.tau = doc.value("tau", config.tau);
  config.eps = doc.value("eps", config.eps);
  config.gamma0 = doc.value("gamma0", config.gamma0);
  config.rho = doc.value("rho", config.rho);
  config.max_iter = doc.value("max_iter", config.max_iter);
  config.burn_in = doc.value("burn_in", config.burn_in);
  config.seed = doc.value("seed", config.seed);
  config.samples = doc.value("samples", config.samples);
  config.out_dir = doc.value("out", config.out_dir);
  config.plot = doc.value("plot", config.plot);
  if (doc.contains("env_params")) config.env_params = doc["env_params"];
}

namespace {

/// Pendulum with a deliberately wrong state Jacobian; negative control for
/// the gradient checker.
class CorruptedJacobian final : public DynamicsMap {
 public:
  explicit CorruptedJacobian(DynamicsPtr inner) : inner_(std::move(inner)) {}

  int state_dim() const override { return inner_->state_dim(); }
  int control_dim() const override { return inner_->control_dim(); }

  Vector evaluate(const Eigen::Ref<const Vector>& x,
                  const Eigen::Ref<const Vector>& u) const override {
    return inner_->evaluate(x, u);
  }
  Matrix jac_x(const Eigen::Ref<const Vector>& x,
               const Eigen::Ref<const Vector>& u) const override {
    return 1.05 * inner_->jac_x(x, u);
  }
  Matrix jac_u(const Eigen::Ref<const Vector>& x,
               const Eigen::Ref<const Vector>& u) const override {
    return inner_->jac_u(x, u);
  }

 private:
  DynamicsPtr inner_;
};

PendulumParams pendulum_params_from(const RunConfig& config) {
  PendulumParams params;
  const auto& overrides = config.env_params;
  params.mass = overrides.value("mass", params.mass);
  params.length = overrides.value("length", params.length);
  params.friction = overrides.value("friction", params.friction);
  params.gravity = overrides.value("gravity", params.gravity);
  params.total_time = overrides.value("total_time", params.total_time);
  params.velocity_weight = overrides.value("lambda1", params.velocity_weight);
  params.control_weight = overrides.value("lambda2", params.control_weight);
  params.finite_diff_jacobians =
      overrides.value("finite_diff_jacobians", params.finite_diff_jacobians);
  if (config.tau > 0) params.dt = params.total_time / config.tau;
  return params;
}

TwoLinkArmParams arm_params_from(const RunConfig& config) {
  TwoLinkArmParams params;
  const auto& overrides = config.env_params;
  params.total_time = overrides.value("total_time", params.total_time);
  params.velocity_weight = overrides.value("lambda1", params.velocity_weight);
  params.control_weight = overrides.value("lambda2", params.control_weight);
  params.finite_diff_jacobians =
      overrides.value("finite_diff_jacobians", params.finite_diff_jacobians);
  if (overrides.contains("target")) {
    const auto target = overrides["target"].get<std::vector<double>>();
    if (target.size() != 2) throw std::runtime_error("target must have two entries");
    params.target = Eigen::Vector2d(target[0], target[1]);
  }
  if (config.tau > 0) params.dt = params.total_time / config.tau;
  return params;
}

}  // namespace

ControlProblem build_environment(const RunConfig& config) {
  if (config.env == "pendulum") {
    return pendulum_problem(pendulum_params_from(config));
  }
  if (config.env == "two_link_arm") {
    return two_link_arm_problem(arm_params_from(config));
  }
  if (config.env == "random_lq") {
    const int tau = config.tau > 0 ? config.tau : 10;
    const int d = config.env_params.value("state_dim", 3);
    const int p = config.env_params.value("control_dim", 2);
    const double cap = config.env_params.value("spectral_cap", 0.9);
    return random_lq_problem(tau, d, p, config.seed, cap);
  }
  if (config.env == "corrupted_pendulum") {
    const auto base = pendulum_problem(pendulum_params_from(config));
    std::vector<DynamicsPtr> maps;
    std::vector<CostPtr> state_costs;
    std::vector<CostPtr> penalties;
    for (int t = 0; t < base.horizon(); ++t) {
      maps.push_back(std::make_shared<CorruptedJacobian>(base.dynamics_ptr(t)));
      state_costs.push_back(base.state_cost_ptr(t + 1));
      penalties.push_back(base.control_penalty_ptr(t));
    }
    return ControlProblem(base.initial_state(), std::move(maps),
                          std::move(state_costs), std::move(penalties));
  }
  throw std::invalid_argument("unknown environment: " + config.env);
}

const std::vector<std::string>& known_solvers() {
  static const std::vector<std::string> names = {
      "gd",        "ilqr",       "reg_ilqr", "acc_reg_ilqr",
      "ilqg",      "reg_ilqg",   "tassa_ilqg", "ddp"};
  return names;
}

SolveResult run_solver(const std::string& name, const ControlProblem& problem,
                       const Command& u0, const SolverConfig& config) {
  if (name == "gd") return gradient_descent(problem, u0, config);
  if (name == "ilqr") return ilqr_solver(problem, u0, config);
  if (name == "reg_ilqr") return regularized_ilqr(problem, u0, config);
  if (name == "acc_reg_ilqr") return accelerated_reg_gn(problem, u0, config);
  if (name == "ilqg") return ilqg_solver(problem, u0, config);
  if (name == "reg_ilqg") return regularized_ilqg(problem, u0, config);
  if (name == "tassa_ilqg") return tassa_ilqg_solver(problem, u0, config);
  if (name == "ddp") return ddp_solver(problem, u0, config);
  throw std::invalid_argument("unknown solver: " + name);
}

std::string resolve_out_dir(const RunConfig& config) {
  if (!config.out_dir.empty()) return config.out_dir;
  if (const char* env = std::getenv("TRAJOPT_OUT"); env != nullptr && *env != '\0') {
    return env;
  }
  return ".";
}

}  // namespace trajopt::cli
