#include "trajopt/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace trajopt {

void SolverConfig::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (!(gamma0 > 0.0)) throw std::invalid_argument("gamma0 must be positive");
  if (!(shrink > 0.0 && shrink < 1.0)) throw std::invalid_argument("shrink must be in (0,1)");
  if (!(armijo_c1 > 0.0 && armijo_c1 < 1.0)) {
    throw std::invalid_argument("armijo_c1 must be in (0,1)");
  }
  if (burn_in < 0) throw std::invalid_argument("burn_in must be nonnegative");
}

void ConvergenceRecord::append(IterationRow row) {
  if (!rows.empty() && row.k <= rows.back().k) {
    throw std::logic_error("convergence record rows must have increasing k");
  }
  rows.push_back(std::move(row));
}

void ConvergenceRecord::write_csv(std::ostream& os) const {
  os << "k,f,grad_norm,gamma,delta,oracle_calls,wall_s\n";
  for (const auto& row : rows) {
    std::ostringstream line;
    line << std::setprecision(17);
    line << row.k << ',' << row.f << ',' << row.grad_norm << ',';
    if (row.gamma) line << *row.gamma;
    line << ',';
    if (row.delta) line << *row.delta;
    line << ',' << row.oracle_calls << ',' << std::setprecision(6) << std::fixed
         << row.wall_s;
    os << line.str() << '\n';
  }
}

double next_extrapolation_weight(double alpha) {
  // Positive root of a^2 + alpha^2 a - alpha^2 = 0.
  const double a2 = alpha * alpha;
  return 0.5 * (-a2 + std::sqrt(a2 * a2 + 4.0 * a2));
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(const Clock::time_point& start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Objective at a candidate command; a diverged rollout reports +inf so line
// searches can reject the trial instead of aborting.
double guarded_objective(const ControlProblem& problem, const Command& u) {
  try {
    return objective(problem, u);
  } catch (const DivergedTrajectoryError&) {
    return std::numeric_limits<double>::infinity();
  }
}

double warm_start(double accepted, double shrink, double gamma0) {
  return std::min(accepted / shrink, gamma0);
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

LineSearchResult sufficient_decrease_linesearch(const ControlProblem& problem,
                                                const ForwardTape& tape, double f_u,
                                                double gamma_start, double shrink,
                                                const ModelLineSearchOptions& options) {
  if (!(gamma_start > 0.0)) throw std::invalid_argument("gamma_start must be positive");
  LineSearchResult result;
  double gamma = gamma_start;
  for (;;) {
    if (gamma < options.min_gamma) {
      throw LineSearchError("sufficient-decrease search underflowed gamma");
    }
    const ModelStep step = options.gaussian_step
                               ? ilqg_step_detail(problem, tape, gamma)
                               : ilqr_step_detail(problem, tape, gamma);
    Command candidate = tape.command() + step.direction;
    const double f_candidate = guarded_objective(problem, candidate);
    const double step_norm_sq = step.direction.flat().squaredNorm();
    const double bound = options.objective_condition
                             ? f_u - 0.5 / gamma * step_norm_sq
                             : step.model_value + 0.5 / gamma * step_norm_sq;
    ++result.trials;
    if (f_candidate <= bound) {
      result.next = std::move(candidate);
      result.gamma = gamma;
      result.f_next = f_candidate;
      result.model_value = step.model_value;
      result.step_norm_sq = step_norm_sq;
      return result;
    }
    gamma *= shrink;
  }
}

LineSearchResult sufficient_decrease_linesearch(const ControlProblem& problem,
                                                const Command& u, double gamma_start,
                                                double shrink,
                                                const ModelLineSearchOptions& options,
                                                OracleCounter* counter) {
  const ForwardTape tape = record(problem, u, 1, counter);
  const double f_u = total_cost(problem, tape.trajectory(), tape.command());
  return sufficient_decrease_linesearch(problem, tape, f_u, gamma_start, shrink,
                                        options);
}

// ---------------------------------------------------------------------------
// Solvers
// ---------------------------------------------------------------------------

namespace {

// Shared per-run bookkeeping: counter, wall clock, current tape/values.
struct RunState {
  explicit RunState(const ControlProblem& problem, const Command& u0)
      : problem(problem), u(u0), start(Clock::now()) {
    refresh();
  }

  // Re-records the tape at the current command and refreshes f and the
  // gradient.
  void refresh() {
    tape = record(problem, u, 1, &counter);
    f = total_cost(problem, tape.trajectory(), tape.command());
    gradient = objective_gradient(problem, tape);
    grad_norm = gradient.norm();
  }

  IterationRow row(int k, std::optional<double> gamma = std::nullopt,
                   std::optional<double> delta = std::nullopt) const {
    IterationRow r;
    r.k = k;
    r.f = f;
    r.grad_norm = grad_norm;
    r.gamma = gamma;
    r.delta = delta;
    r.oracle_calls = counter.total();
    r.wall_s = seconds_since(start);
    return r;
  }

  const ControlProblem& problem;
  Command u;
  OracleCounter counter;
  ForwardTape tape;
  double f = 0.0;
  Command gradient;
  double grad_norm = 0.0;
  Clock::time_point start;
};

// Step-size schedule shared by the regularized solvers: warm start with a
// bounded increase, optionally frozen after a burn-in phase.
class StepSchedule {
 public:
  explicit StepSchedule(const SolverConfig& config)
      : gamma0_(config.gamma0),
        shrink_(config.shrink),
        burn_in_(config.burn_in),
        next_start_(config.gamma0) {}

  double start() const { return frozen_ ? *frozen_ : next_start_; }

  void accepted(double gamma) {
    if (frozen_) return;
    next_start_ = warm_start(gamma, shrink_, gamma0_);
    if (burn_in_ > 0) {
      history_.push_back(gamma);
      if (static_cast<int>(history_.size()) == burn_in_) frozen_ = median(history_);
    }
  }

 private:
  double gamma0_;
  double shrink_;
  int burn_in_;
  double next_start_;
  std::vector<double> history_;
  std::optional<double> frozen_;
};

SolveResult regularized_solver(const ControlProblem& problem, const Command& u0,
                               const SolverConfig& config, bool gaussian,
                               const IterationObserver& observer) {
  config.validate();
  RunState run(problem, u0);
  ConvergenceRecord rec;
  rec.append(run.row(0));
  if (run.grad_norm < config.tolerance) {
    rec.reached_tolerance = true;
    return {run.u, std::move(rec)};
  }

  ModelLineSearchOptions options;
  options.objective_condition = config.objective_decrease_condition;
  options.gaussian_step = gaussian;
  StepSchedule schedule(config);

  for (int k = 1; k <= config.max_iterations; ++k) {
    LineSearchResult ls = sufficient_decrease_linesearch(
        problem, run.tape, run.f, schedule.start(), config.shrink, options);
    if (observer) observer(k, run.u, ls.next, ls.gamma);
    run.u = std::move(ls.next);
    run.refresh();
    rec.append(run.row(k, ls.gamma));
    schedule.accepted(ls.gamma);
    if (run.grad_norm < config.tolerance) {
      rec.reached_tolerance = true;
      break;
    }
  }
  return {run.u, std::move(rec)};
}

// Armijo backtracking on the scalar step along a fixed direction.
double armijo_search(const ControlProblem& problem, const Command& u, double f_u,
                     double slope, const Command& direction, double c1, double shrink,
                     Command* accepted, double* f_accepted) {
  double alpha = 1.0;
  for (;;) {
    Command candidate = u + alpha * direction;
    const double f_candidate = guarded_objective(problem, candidate);
    if (f_candidate <= f_u + c1 * alpha * slope) {
      *accepted = std::move(candidate);
      *f_accepted = f_candidate;
      return alpha;
    }
    alpha *= shrink;
    if (alpha < 1e-12) {
      throw LineSearchError("Armijo search found no acceptable step");
    }
  }
}

SolveResult gauss_newton_solver(const ControlProblem& problem, const Command& u0,
                                const SolverConfig& config, bool gaussian) {
  config.validate();
  RunState run(problem, u0);
  ConvergenceRecord rec;
  rec.append(run.row(0));
  if (run.grad_norm < config.tolerance) {
    rec.reached_tolerance = true;
    return {run.u, std::move(rec)};
  }

  for (int k = 1; k <= config.max_iterations; ++k) {
    const ModelStep step = gaussian
                               ? ilqg_step_detail(problem, run.tape, kInfiniteStep)
                               : ilqr_step_detail(problem, run.tape, kInfiniteStep);
    const double slope = run.gradient.dot(step.direction);
    Command next;
    double f_next = 0.0;
    const double alpha = armijo_search(problem, run.u, run.f, slope, step.direction,
                                       config.armijo_c1, config.shrink, &next, &f_next);
    run.u = std::move(next);
    run.refresh();
    rec.append(run.row(k, alpha));
    if (run.grad_norm < config.tolerance) {
      rec.reached_tolerance = true;
      break;
    }
  }
  return {run.u, std::move(rec)};
}

using RolloutStep = std::function<Command(const ControlProblem&, const Command&,
                                          OracleCounter*, StepReport*)>;

SolveResult rollout_solver(const ControlProblem& problem, const Command& u0,
                           const SolverConfig& config, const RolloutStep& step) {
  config.validate();
  RunState run(problem, u0);
  ConvergenceRecord rec;
  rec.append(run.row(0));
  if (run.grad_norm < config.tolerance) {
    rec.reached_tolerance = true;
    return {run.u, std::move(rec)};
  }

  for (int k = 1; k <= config.max_iterations; ++k) {
    StepReport report;
    run.u = step(problem, run.u, &run.counter, &report);
    run.refresh();
    rec.append(run.row(k, report.accepted_step));
    if (run.grad_norm < config.tolerance) {
      rec.reached_tolerance = true;
      break;
    }
  }
  return {run.u, std::move(rec)};
}

}  // namespace

SolveResult gradient_descent(const ControlProblem& problem, const Command& u0,
                             const SolverConfig& config) {
  config.validate();
  RunState run(problem, u0);
  ConvergenceRecord rec;
  rec.append(run.row(0));
  if (run.grad_norm < config.tolerance) {
    rec.reached_tolerance = true;
    return {run.u, std::move(rec)};
  }

  double gamma_start = config.gamma0;
  for (int k = 1; k <= config.max_iterations; ++k) {
    double gamma = gamma_start;
    Command next;
    for (;;) {
      Command candidate = run.u - gamma * run.gradient;
      const double f_candidate = guarded_objective(problem, candidate);
      if (f_candidate <= run.f - 0.5 * gamma * run.grad_norm * run.grad_norm) {
        next = std::move(candidate);
        break;
      }
      gamma *= config.shrink;
      if (gamma < 1e-14) {
        throw LineSearchError("gradient-descent search underflowed gamma");
      }
    }
    run.u = std::move(next);
    run.refresh();
    rec.append(run.row(k, gamma));
    gamma_start = warm_start(gamma, config.shrink, config.gamma0);
    if (run.grad_norm < config.tolerance) {
      rec.reached_tolerance = true;
      break;
    }
  }
  return {run.u, std::move(rec)};
}

SolveResult regularized_ilqr(const ControlProblem& problem, const Command& u0,
                             const SolverConfig& config,
                             const IterationObserver& observer) {
  if (config.accelerate) {
    if (observer) {
      throw std::invalid_argument(
          "iteration observers are not supported on the accelerated path");
    }
    return accelerated_reg_gn(problem, u0, config);
  }
  return regularized_solver(problem, u0, config, false, observer);
}

SolveResult regularized_ilqg(const ControlProblem& problem, const Command& u0,
                             const SolverConfig& config,
                             const IterationObserver& observer) {
  return regularized_solver(problem, u0, config, true, observer);
}

SolveResult accelerated_reg_gn(const ControlProblem& problem, const Command& u0,
                               const SolverConfig& config) {
  config.validate();
  RunState run(problem, u0);
  ConvergenceRecord rec;
  rec.append(run.row(0));
  if (run.grad_norm < config.tolerance) {
    rec.reached_tolerance = true;
    return {run.u, std::move(rec)};
  }

  ModelLineSearchOptions options;
  options.objective_condition = config.objective_decrease_condition;
  StepSchedule schedule_v(config);
  StepSchedule schedule_w(config);

  AccelState accel;
  accel.anchor = run.u;

  for (int k = 1; k <= config.max_iterations; ++k) {
    // Regularized branch from the current iterate.
    LineSearchResult ls_v = sufficient_decrease_linesearch(
        problem, run.tape, run.f, schedule_v.start(), config.shrink, options);
    schedule_v.accepted(ls_v.gamma);

    // Extrapolated branch.
    accel.extrapolated = accel.alpha * accel.anchor + (1.0 - accel.alpha) * run.u;
    Command w = ls_v.next;
    double f_w = ls_v.f_next;
    std::optional<double> delta;
    try {
      LineSearchResult ls_w =
          sufficient_decrease_linesearch(problem, accel.extrapolated,
                                         schedule_w.start(), config.shrink, options,
                                         &run.counter);
      schedule_w.accepted(ls_w.gamma);
      delta = ls_w.gamma;
      w = std::move(ls_w.next);
      f_w = ls_w.f_next;
    } catch (const DivergedTrajectoryError&) {
      // Extrapolated point left the dynamics' stable region; fall back to the
      // regularized branch for this round.
    } catch (const LineSearchError&) {
    }
    accel.anchor = run.u + (1.0 / accel.alpha) * (w - run.u);
    accel.alpha = next_extrapolation_weight(accel.alpha);

    // Best of the two steps.
    run.u = f_w < ls_v.f_next ? std::move(w) : std::move(ls_v.next);
    run.refresh();
    rec.append(run.row(k, ls_v.gamma, delta));
    if (run.grad_norm < config.tolerance) {
      rec.reached_tolerance = true;
      break;
    }
  }
  return {run.u, std::move(rec)};
}

SolveResult ilqr_solver(const ControlProblem& problem, const Command& u0,
                        const SolverConfig& config) {
  return gauss_newton_solver(problem, u0, config, false);
}

SolveResult ilqg_solver(const ControlProblem& problem, const Command& u0,
                        const SolverConfig& config) {
  return gauss_newton_solver(problem, u0, config, true);
}

SolveResult tassa_ilqg_solver(const ControlProblem& problem, const Command& u0,
                              const SolverConfig& config) {
  return rollout_solver(problem, u0, config,
                        [&config](const ControlProblem& p, const Command& u,
                                  OracleCounter* ctr, StepReport* rep) {
                          return tassa_ilqg_step(p, u, config.rollout_line_search,
                                                 ctr, rep);
                        });
}

SolveResult ddp_solver(const ControlProblem& problem, const Command& u0,
                       const SolverConfig& config) {
  return rollout_solver(problem, u0, config,
                        [&config](const ControlProblem& p, const Command& u,
                                  OracleCounter* ctr, StepReport* rep) {
                          DdpOptions opts = config.ddp;
                          opts.line_search = config.rollout_line_search;
                          return ddp_step(p, u, opts, ctr, rep);
                        });
}

}  // namespace trajopt
