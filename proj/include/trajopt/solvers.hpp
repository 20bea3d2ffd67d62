#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "trajopt/steps.hpp"

namespace trajopt {

struct SolverConfig {
  int max_iterations = 500;
  double tolerance = 1e-6;  // stop when ||grad f|| drops below this
  // Initial and maximal proximal step size.  The warm start never grows past
  // it, so it must sit above the curvature scale of the problem; 100 covers
  // both bundled environments with margin.
  double gamma0 = 100.0;
  double shrink = 0.5;      // line-search decrease factor rho
  // Route regularized_ilqr through the extrapolated scheme.
  bool accelerate = false;
  double armijo_c1 = 1e-4;  // slope fraction for the ILQR Armijo test
  unsigned seed = 0;        // reserved for stochastic stopping rules

  // Accept steps on plain objective decrease instead of the model bound.
  bool objective_decrease_condition = false;
  // When positive, freeze the step size at the median accepted value of the
  // first `burn_in` iterations (the frozen value still backtracks if needed,
  // keeping every iterate non-increasing).
  int burn_in = 0;

  DdpOptions ddp;
  RolloutLineSearch rollout_line_search;

  void validate() const;
};

struct IterationRow {
  int k = 0;
  double f = 0.0;
  double grad_norm = 0.0;
  std::optional<double> gamma;  // accepted gamma (or alpha for rollout solvers)
  std::optional<double> delta;  // extrapolated-branch step, accelerated only
  long oracle_calls = 0;        // cumulative
  double wall_s = 0.0;          // cumulative
};

/// Append-only per-iteration log; rows keep strictly increasing k.
struct ConvergenceRecord {
  std::vector<IterationRow> rows;
  bool reached_tolerance = false;

  void append(IterationRow row);
  /// Schema: k,f,grad_norm,gamma,delta,oracle_calls,wall_s
  void write_csv(std::ostream& os) const;
};

struct SolveResult {
  Command command;
  ConvergenceRecord record;
};

/// Extrapolation bookkeeping of the accelerated scheme.
struct AccelState {
  double alpha = 1.0;  // alpha_1 = 1
  Command anchor;        // z_k
  Command extrapolated;  // y_k
};

/// Next weight: the root in (0,1) of (1 - a') / a'^2 = 1 / alpha^2.
double next_extrapolation_weight(double alpha);

struct LineSearchResult {
  Command next;
  double gamma = 0.0;
  double f_next = 0.0;
  double model_value = 0.0;   // quadratic model at the accepted direction
  double step_norm_sq = 0.0;  // ||next - u||^2
  int trials = 0;
};

struct ModelLineSearchOptions {
  bool objective_condition = false;
  bool gaussian_step = false;
  double min_gamma = 1e-14;
};

/// Backtracking on gamma for the regularized Gauss-Newton step: accepts the
/// first gamma in {start, start*rho, ...} whose candidate satisfies
///   f(u + v) <= model(v) + (1 / 2 gamma) ||v||^2,
/// or plain decrease f(u + v) <= f(u) - (1 / 2 gamma) ||v||^2 when the
/// objective condition is selected.
LineSearchResult sufficient_decrease_linesearch(const ControlProblem& problem,
                                                const Command& u, double gamma_start,
                                                double shrink,
                                                const ModelLineSearchOptions& options = {},
                                                OracleCounter* counter = nullptr);

/// Same search reusing an already recorded tape at u.
LineSearchResult sufficient_decrease_linesearch(const ControlProblem& problem,
                                                const ForwardTape& tape, double f_u,
                                                double gamma_start, double shrink,
                                                const ModelLineSearchOptions& options = {});

/// Called once per accepted outer iteration of the regularized solvers.
using IterationObserver =
    std::function<void(int k, const Command& current, const Command& next, double gamma)>;

SolveResult gradient_descent(const ControlProblem& problem, const Command& u0,
                             const SolverConfig& config);

SolveResult regularized_ilqr(const ControlProblem& problem, const Command& u0,
                             const SolverConfig& config,
                             const IterationObserver& observer = {});

SolveResult regularized_ilqg(const ControlProblem& problem, const Command& u0,
                             const SolverConfig& config,
                             const IterationObserver& observer = {});

SolveResult accelerated_reg_gn(const ControlProblem& problem, const Command& u0,
                               const SolverConfig& config);

SolveResult ilqr_solver(const ControlProblem& problem, const Command& u0,
                        const SolverConfig& config);

SolveResult ilqg_solver(const ControlProblem& problem, const Command& u0,
                        const SolverConfig& config);

SolveResult tassa_ilqg_solver(const ControlProblem& problem, const Command& u0,
                              const SolverConfig& config);

SolveResult ddp_solver(const ControlProblem& problem, const Command& u0,
                       const SolverConfig& config);

}  // namespace trajopt
