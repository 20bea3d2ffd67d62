#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "trajopt/envs.hpp"
#include "trajopt/solvers.hpp"

namespace trajopt::cli {

struct RunConfig {
  std::string env = "pendulum";
  std::vector<std::string> solvers;
  int tau = 0;  // 0 keeps the environment default
  double eps = 1e-6;
  double gamma0 = 100.0;
  double rho = 0.5;
  int max_iter = 500;
  int burn_in = 0;
  unsigned seed = 0;
  int samples = 20;  // probes for check-grad
  std::string out_dir;
  bool plot = false;
  nlohmann::json env_params = nlohmann::json::object();

  SolverConfig solver_config() const;
};

/// Base values from a JSON config file; explicitly passed flags override them
/// afterwards.
void apply_config_file(RunConfig& config, const std::string& path);

/// Environment registry: pendulum, two_link_arm, random_lq, plus the
/// corrupted_pendulum negative control used to exercise check-grad.
ControlProblem build_environment(const RunConfig& config);

const std::vector<std::string>& known_solvers();

SolveResult run_solver(const std::string& name, const ControlProblem& problem,
                       const Command& u0, const SolverConfig& config);

/// Resolved output directory: --out flag, else $TRAJOPT_OUT, else ".".
std::string resolve_out_dir(const RunConfig& config);

}  // namespace trajopt::cli
