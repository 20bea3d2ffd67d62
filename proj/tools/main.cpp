// Command-line harness: run one solver on a benchmark problem, compare
// several on the same problem, or check the analytic gradient against finite
// differences.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <thread>

#include "run_config.hpp"
#include "svg_plot.hpp"
#include "trajopt/autodiff.hpp"
#include "trajopt/finite_diff.hpp"

namespace fs = std::filesystem;
using namespace trajopt;
using namespace trajopt::cli;

namespace {

void add_common_flags(CLI::App* cmd, RunConfig& config, std::string& config_path) {
  cmd->add_option("--config", config_path, "JSON config file (flags override it)");
  cmd->add_option("--env", config.env,
                  "environment: pendulum, two_link_arm, random_lq");
  cmd->add_option("--tau", config.tau, "horizon override");
  cmd->add_option("--eps", config.eps, "gradient-norm stopping tolerance");
  cmd->add_option("--gamma0", config.gamma0, "initial step size");
  cmd->add_option("--rho", config.rho, "line-search shrink factor");
  cmd->add_option("--max-iter", config.max_iter, "iteration cap");
  cmd->add_option("--burn-in", config.burn_in,
                  "freeze the step size after this many iterations (0 = off)");
  cmd->add_option("--seed", config.seed, "random seed");
  cmd->add_option("--out", config.out_dir, "output directory (default $TRAJOPT_OUT)");
  cmd->add_flag("--plot", config.plot, "write SVG convergence plots");
}

// Re-applies a JSON config underneath any explicitly passed flags.
void layer_config_file(CLI::App* cmd, RunConfig& config, const std::string& path) {
  if (path.empty()) return;
  RunConfig from_file;
  apply_config_file(from_file, path);
  // Flags the user did not pass fall back to the file's values.
  if (cmd->count("--env") == 0) config.env = from_file.env;
  if (cmd->count("--tau") == 0) config.tau = from_file.tau;
  if (cmd->count("--eps") == 0) config.eps = from_file.eps;
  if (cmd->count("--gamma0") == 0) config.gamma0 = from_file.gamma0;
  if (cmd->count("--rho") == 0) config.rho = from_file.rho;
  if (cmd->count("--max-iter") == 0) config.max_iter = from_file.max_iter;
  if (cmd->count("--burn-in") == 0) config.burn_in = from_file.burn_in;
  if (cmd->count("--seed") == 0) config.seed = from_file.seed;
  if (cmd->count("--out") == 0 && !from_file.out_dir.empty()) {
    config.out_dir = from_file.out_dir;
  }
  if (cmd->count("--plot") == 0) config.plot = from_file.plot;
  if (cmd->count("--solver") == 0 && !from_file.solvers.empty()) {
    config.solvers = from_file.solvers;
  }
  config.env_params = from_file.env_params;
  const CLI::Option* samples = cmd->get_option_no_throw("--samples");
  if (samples != nullptr && samples->count() == 0) config.samples = from_file.samples;
}

std::vector<double> iterations(const ConvergenceRecord& rec) {
  std::vector<double> v;
  for (const auto& row : rec.rows) v.push_back(row.k);
  return v;
}

std::vector<double> objectives(const ConvergenceRecord& rec) {
  std::vector<double> v;
  for (const auto& row : rec.rows) v.push_back(row.f);
  return v;
}

std::vector<double> gradient_norms(const ConvergenceRecord& rec) {
  std::vector<double> v;
  for (const auto& row : rec.rows) v.push_back(row.grad_norm);
  return v;
}

std::vector<double> oracle_calls(const ConvergenceRecord& rec) {
  std::vector<double> v;
  for (const auto& row : rec.rows) v.push_back(static_cast<double>(row.oracle_calls));
  return v;
}

void write_trace(const fs::path& path, const ConvergenceRecord& rec) {
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write " + path.string());
  rec.write_csv(file);
}

int cmd_solve(const RunConfig& config) {
  if (config.solvers.size() != 1) {
    std::cerr << "solve expects exactly one --solver\n";
    return 1;
  }
  const ControlProblem problem = build_environment(config);
  const Command u0(problem.horizon(), problem.control_dim());
  const SolveResult result =
      run_solver(config.solvers[0], problem, u0, config.solver_config());

  const fs::path out_dir = resolve_out_dir(config);
  fs::create_directories(out_dir);
  write_trace(out_dir / "trace.csv", result.record);

  if (config.plot) {
    PlotSpec fval{"objective", "iteration", "f", false,
                  {{config.solvers[0], iterations(result.record), objectives(result.record)}}};
    PlotSpec grad{"gradient norm", "iteration", "|grad f|", true,
                  {{config.solvers[0], iterations(result.record),
                    gradient_norms(result.record)}}};
    write_svg((out_dir / "fval.svg").string(), {fval});
    write_svg((out_dir / "gradnorm.svg").string(), {grad});
  }

  std::cout << "final f=" << result.record.rows.back().f
            << " |grad|=" << result.record.rows.back().grad_norm << " after "
            << result.record.rows.back().k << " iterations\n";
  return result.record.reached_tolerance ? 0 : 2;
}

int cmd_compare(const RunConfig& config) {
  if (config.solvers.size() < 2) {
    std::cerr << "compare expects at least two --solver flags\n";
    return 1;
  }
  const ControlProblem problem = build_environment(config);
  const Command u0(problem.horizon(), problem.control_dim());
  const SolverConfig solver_config = config.solver_config();

  std::vector<SolveResult> results(config.solvers.size());
  std::vector<std::string> errors(config.solvers.size());
  std::vector<std::thread> workers;
  for (size_t i = 0; i < config.solvers.size(); ++i) {
    workers.emplace_back([&, i] {
      try {
        results[i] = run_solver(config.solvers[i], problem, u0, solver_config);
      } catch (const std::exception& err) {
        errors[i] = err.what();
      }
    });
  }
  for (auto& worker : workers) worker.join();
  for (size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) {
      std::cerr << config.solvers[i] << ": " << errors[i] << '\n';
      return 1;
    }
  }

  const fs::path out_dir = resolve_out_dir(config);
  fs::create_directories(out_dir);

  PlotSpec f_iter{"objective", "iteration", "f", false, {}};
  PlotSpec f_oracle{"objective", "oracle calls", "f", false, {}};
  PlotSpec g_iter{"gradient norm", "iteration", "|grad f|", true, {}};
  PlotSpec g_oracle{"gradient norm", "oracle calls", "|grad f|", true, {}};
  for (size_t i = 0; i < config.solvers.size(); ++i) {
    const auto& rec = results[i].record;
    write_trace(out_dir / ("trace_" + config.solvers[i] + ".csv"), rec);
    f_iter.series.push_back({config.solvers[i], iterations(rec), objectives(rec)});
    f_oracle.series.push_back({config.solvers[i], oracle_calls(rec), objectives(rec)});
    g_iter.series.push_back({config.solvers[i], iterations(rec), gradient_norms(rec)});
    g_oracle.series.push_back(
        {config.solvers[i], oracle_calls(rec), gradient_norms(rec)});
    std::cout << config.solvers[i] << ": f=" << rec.rows.back().f
              << " |grad|=" << rec.rows.back().grad_norm
              << " oracle_calls=" << rec.rows.back().oracle_calls << '\n';
  }
  write_svg((out_dir / "compare.svg").string(), {f_iter, f_oracle, g_iter, g_oracle});
  return 0;
}

int cmd_check_grad(const RunConfig& config) {
  const ControlProblem problem = build_environment(config);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 0.5);

  double worst = 0.0;
  for (int probe = 0; probe < config.samples; ++probe) {
    Command u(problem.horizon(), problem.control_dim());
    for (Eigen::Index i = 0; i < u.flat().size(); ++i) u.flat()[i] = gauss(rng);
    const ForwardTape tape = record(problem, u);
    const Command grad = objective_gradient(problem, tape);
    const Command fd = finite_diff_objective_gradient(problem, u);
    const double scale = std::max(1e-12, fd.flat().cwiseAbs().maxCoeff());
    worst = std::max(worst,
                     (grad.flat() - fd.flat()).cwiseAbs().maxCoeff() / scale);
  }
  std::cout << "max relative gradient error over " << config.samples
            << " random commands: " << worst << '\n';
  return worst <= 1e-4 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trajectory optimization benchmark harness"};
  app.require_subcommand(1);

  RunConfig solve_config, compare_config, check_config;
  std::string solve_file, compare_file, check_file;

  std::string solver_list;
  for (const auto& name : known_solvers()) {
    solver_list += solver_list.empty() ? name : ", " + name;
  }

  CLI::App* solve = app.add_subcommand("solve", "run one solver and write trace.csv");
  add_common_flags(solve, solve_config, solve_file);
  solve->add_option("--solver", solve_config.solvers, "solver name (" + solver_list + ")");

  CLI::App* compare =
      app.add_subcommand("compare", "run several solvers on the same problem");
  add_common_flags(compare, compare_config, compare_file);
  compare->add_option("--solver", compare_config.solvers,
                      "solver names (repeat the flag)");

  CLI::App* check = app.add_subcommand("check-grad",
                                       "compare the gradient against finite differences");
  add_common_flags(check, check_config, check_file);
  check->add_option("--samples", check_config.samples, "number of random probes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  }

  try {
    if (solve->parsed()) {
      layer_config_file(solve, solve_config, solve_file);
      return cmd_solve(solve_config);
    }
    if (compare->parsed()) {
      layer_config_file(compare, compare_config, compare_file);
      return cmd_compare(compare_config);
    }
    layer_config_file(check, check_config, check_file);
    return cmd_check_grad(check_config);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
}
