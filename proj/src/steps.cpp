#include "trajopt/steps.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>

namespace trajopt {

LqSubproblem build_lq_subproblem(const ControlProblem& problem,
                                 const ForwardTape& tape, double gamma,
                                 bool with_noise) {
  const int tau = tape.horizon();
  LqSubproblem sub;
  sub.horizon = tau;
  sub.state_dim = tape.state_dim();
  sub.control_dim = tape.control_dim();
  sub.gamma = gamma;
  sub.jac_x.reserve(tau);
  sub.jac_u.reserve(tau);
  sub.state_grad.reserve(tau);
  sub.state_hess.reserve(tau);
  sub.control_grad.reserve(tau);
  sub.control_hess.reserve(tau);

  const Trajectory& traj = tape.trajectory();
  for (int t = 0; t < tau; ++t) {
    sub.jac_x.push_back(tape.jac_x(t));
    sub.jac_u.push_back(tape.jac_u(t));
    sub.state_grad.push_back(problem.state_cost(t + 1).gradient(traj.state(t + 1)));
    sub.state_hess.push_back(problem.state_cost(t + 1).hessian(traj.state(t + 1)));
    sub.control_grad.push_back(problem.control_penalty(t).gradient(tape.command()[t]));
    sub.control_hess.push_back(problem.control_penalty(t).hessian(tape.command()[t]));
  }
  if (with_noise && tape.has_noise()) {
    sub.jac_w.reserve(tau);
    sub.hess_uw.reserve(tau);
    for (int t = 0; t < tau; ++t) {
      sub.jac_w.push_back(tape.jac_w(t));
      sub.hess_uw.push_back(tape.hess_uw(t));
    }
  }
  return sub;
}

double quadratic_model_value(const ControlProblem& problem, const ForwardTape& tape,
                             const Command& v, const StateSequence& y) {
  const int tau = tape.horizon();
  const Trajectory& traj = tape.trajectory();
  double value = 0.0;
  for (int t = 1; t <= tau; ++t) {
    const auto& cost = problem.state_cost(t);
    const auto x_t = traj.state(t);
    const auto y_t = y[t - 1];
    value += cost.value(x_t) + cost.gradient(x_t).dot(y_t) +
             0.5 * y_t.dot(cost.hessian(x_t) * y_t);
  }
  for (int t = 0; t < tau; ++t) {
    const auto& penalty = problem.control_penalty(t);
    const auto u_t = tape.command()[t];
    const auto v_t = v[t];
    value += penalty.value(u_t) + penalty.gradient(u_t).dot(v_t) +
             0.5 * v_t.dot(penalty.hessian(u_t) * v_t);
  }
  return value;
}

namespace {

ModelStep model_step(const ControlProblem& problem, const ForwardTape& tape,
                     double gamma, bool gaussian) {
  const LqSubproblem sub = build_lq_subproblem(problem, tape, gamma, gaussian);
  const LqSolution solution = gaussian ? lqg_backward(sub) : lq_backward(sub);
  LqRolloutResult roll = lq_rollout(sub, solution.policy);

  ModelStep step;
  step.current_value = total_cost(problem, tape.trajectory(), tape.command());
  step.model_value = quadratic_model_value(problem, tape, roll.controls, roll.states);
  step.direction = std::move(roll.controls);
  step.linear_states = std::move(roll.states);
  return step;
}

}  // namespace

ModelStep ilqr_step_detail(const ControlProblem& problem, const ForwardTape& tape,
                           double gamma) {
  return model_step(problem, tape, gamma, false);
}

ModelStep ilqg_step_detail(const ControlProblem& problem, const ForwardTape& tape,
                           double gamma) {
  return model_step(problem, tape, gamma, true);
}

Command ilqr_step(const ControlProblem& problem, const Command& u, double gamma,
                  OracleCounter* counter) {
  const ForwardTape tape = record(problem, u, 1, counter);
  return ilqr_step_detail(problem, tape, gamma).direction;
}

Command ilqg_step(const ControlProblem& problem, const Command& u, double gamma,
                  OracleCounter* counter) {
  const ForwardTape tape = record(problem, u, 1, counter);
  return ilqg_step_detail(problem, tape, gamma).direction;
}

namespace {

struct PolicyTrial {
  Command command;
  double value = std::numeric_limits<double>::infinity();
  bool finite = false;
};

// Rollout on the true dynamics with feedback around the base trajectory.
// A diverged rollout is reported as a non-finite trial, not an error, so the
// caller's line search can reject it and shrink.
PolicyTrial rollout_policy(const ControlProblem& problem, const Command& base,
                           const Trajectory& base_traj, const FeedbackPolicy& policy,
                           double alpha) {
  const int tau = problem.horizon();
  PolicyTrial trial;
  trial.command = Command(tau, problem.control_dim());
  StateSequence states(tau, problem.state_dim());
  Vector x = problem.initial_state();
  for (int t = 0; t < tau; ++t) {
    const Vector u_t = base[t].eval() + policy.gains[t] * (x - base_traj.state(t)) +
                       alpha * policy.offsets[t];
    trial.command[t] = u_t;
    x = problem.dynamics(t).evaluate(x, u_t);
    if (!x.allFinite()) return trial;
    states[t] = x;
  }
  trial.value = total_cost(problem, Trajectory(problem.initial_state(),
                                               std::move(states)),
                           trial.command);
  trial.finite = std::isfinite(trial.value);
  return trial;
}

Command rollout_line_search(const ControlProblem& problem, const Command& base,
                            const Trajectory& base_traj, double base_value,
                            const FeedbackPolicy& policy,
                            const RolloutLineSearch& ls, StepReport* report) {
  double alpha = 1.0;
  int trials = 0;
  for (;;) {
    PolicyTrial trial = rollout_policy(problem, base, base_traj, policy, alpha);
    ++trials;
    if (trial.finite && trial.value <= base_value) {
      if (report != nullptr) {
        report->accepted_step = alpha;
        report->inner_iterations = trials;
        report->predicted_decrease = base_value - trial.value;
      }
      return std::move(trial.command);
    }
    alpha *= ls.shrink;
    if (alpha < ls.min_step) {
      throw LineSearchError("rollout line search found no non-increasing step");
    }
  }
}

}  // namespace

Command tassa_ilqg_step(const ControlProblem& problem, const Command& u,
                        const RolloutLineSearch& line_search, OracleCounter* counter,
                        StepReport* report) {
  OracleCounter local;
  OracleCounter* ctr = counter != nullptr ? counter : &local;
  const long before = ctr->total();

  const ForwardTape tape = record(problem, u, 1, ctr);
  const LqSubproblem sub = build_lq_subproblem(problem, tape, kInfiniteStep, false);
  const LqSolution solution = lq_backward(sub);
  const double f_u = total_cost(problem, tape.trajectory(), tape.command());

  Command next = rollout_line_search(problem, u, tape.trajectory(), f_u,
                                     solution.policy, line_search, report);
  if (report != nullptr) report->oracle_calls = ctr->total() - before;
  return next;
}

namespace {

FeedbackPolicy ddp_backward(const ControlProblem& problem, const ForwardTape& tape,
                            const DdpOptions& options, int* escalations) {
  const int tau = tape.horizon();
  const Trajectory& traj = tape.trajectory();

  Matrix value_hess = problem.state_cost(tau).hessian(traj.state(tau));
  Vector value_grad = problem.state_cost(tau).gradient(traj.state(tau));

  FeedbackPolicy policy;
  policy.gains.assign(tau, Matrix());
  policy.offsets.assign(tau, Vector());

  for (int t = tau - 1; t >= 0; --t) {
    const Matrix& jx = tape.jac_x(t);
    const Matrix& ju = tape.jac_u(t);
    const auto u_t = tape.command()[t];

    Vector contraction_grad = value_grad;
    if (options.shifted_cost_to_go) {
      contraction_grad += value_hess * traj.state(t + 1);
    }

    Vector q_u = problem.control_penalty(t).gradient(u_t) + ju * contraction_grad;
    Matrix q_uu = problem.control_penalty(t).hessian(u_t) +
                  ju * value_hess * ju.transpose() +
                  contract_output(tape.hess_uu(t), contraction_grad);
    Matrix q_ux = ju * value_hess * jx.transpose() +
                  contract_output(tape.hess_ux(t), contraction_grad);

    Vector q_x = jx * contraction_grad;
    Matrix q_xx = jx * value_hess * jx.transpose() +
                  contract_output(tape.hess_xx(t), contraction_grad);
    if (t >= 1) {
      q_x += problem.state_cost(t).gradient(traj.state(t));
      q_xx += problem.state_cost(t).hessian(traj.state(t));
    }

    q_uu = 0.5 * (q_uu + q_uu.transpose().eval());
    Eigen::LLT<Matrix> chol(q_uu);
    double lambda = options.lambda0;
    while (chol.info() != Eigen::Success) {
      if (lambda > options.lambda_max) {
        throw IndefiniteModelError("control block stays indefinite at t=" +
                                   std::to_string(t));
      }
      Matrix jittered = q_uu;
      jittered.diagonal().array() += lambda;
      chol.compute(jittered);
      lambda *= options.lambda_grow;
      if (escalations != nullptr) ++*escalations;
    }

    policy.gains[t] = -chol.solve(q_ux);
    policy.offsets[t] = -chol.solve(q_u);

    Matrix next_hess = q_xx + q_ux.transpose() * policy.gains[t];
    value_hess = 0.5 * (next_hess + next_hess.transpose().eval());
    value_grad = q_x + q_ux.transpose() * policy.offsets[t];
  }
  return policy;
}

}  // namespace

Command ddp_step(const ControlProblem& problem, const Command& u,
                 const DdpOptions& options, OracleCounter* counter,
                 StepReport* report) {
  OracleCounter local;
  OracleCounter* ctr = counter != nullptr ? counter : &local;
  const long before = ctr->total();

  const ForwardTape tape = record(problem, u, 2, ctr);
  int escalations = 0;
  const FeedbackPolicy policy = ddp_backward(problem, tape, options, &escalations);
  const double f_u = total_cost(problem, tape.trajectory(), tape.command());

  Command next = rollout_line_search(problem, u, tape.trajectory(), f_u, policy,
                                     options.line_search, report);
  if (report != nullptr) {
    report->inner_iterations += escalations;
    report->oracle_calls = ctr->total() - before;
  }
  return next;
}

Command gn_step_dual(const ControlProblem& problem, const Command& u, double gamma,
                     OracleCounter* counter, StepReport* report) {
  if (!std::isfinite(gamma) || gamma <= 0.0) {
    throw std::invalid_argument("gn_step_dual requires a finite positive gamma");
  }
  if (!problem.is_last_state_only()) {
    throw UnsupportedStructureError(
        "dual step requires a problem with only a terminal state cost");
  }

  OracleCounter local;
  OracleCounter* ctr = counter != nullptr ? counter : &local;
  const long before = ctr->total();

  const ForwardTape tape = record(problem, u, 1, ctr);
  const int tau = tape.horizon();
  const int d = tape.state_dim();
  const int p = tape.control_dim();
  const double inv_gamma = 1.0 / gamma;

  const auto x_tau = tape.trajectory().state(tau);
  const Vector terminal_grad = problem.state_cost(tau).gradient(x_tau);
  Eigen::LLT<Matrix> terminal_chol(problem.state_cost(tau).hessian(x_tau));
  if (terminal_chol.info() != Eigen::Success) {
    throw UnsupportedStructureError("terminal cost Hessian is not positive definite");
  }

  std::vector<Eigen::LLT<Matrix>> prox_chol;
  prox_chol.reserve(tau);
  for (int t = 0; t < tau; ++t) {
    Matrix block = problem.control_penalty(t).hessian(u[t]);
    block.diagonal().array() += inv_gamma;
    prox_chol.emplace_back(block);
    if (prox_chol.back().info() != Eigen::Success) {
      throw IllConditionedSubproblemError(t);
    }
  }
  const Command penalty_grad = control_penalty_gradients(problem, u);

  const auto solve_prox = [&](const Command& w) {
    Command out(tau, p);
    for (int t = 0; t < tau; ++t) out[t] = prox_chol[t].solve(w[t].eval());
    return out;
  };
  // grad x_tau(u) z as an adjoint product with only the terminal block set.
  const auto apply_terminal_jac = [&](const Vector& z) {
    StateSequence dual(tau, d);
    dual[tau - 1] = z;
    return adjoint_product(tape, dual);
  };
  const auto apply_terminal_jac_t = [&](const Command& w) -> Vector {
    return tangent_product(tape, w)[tau - 1];
  };

  const Vector rhs =
      terminal_chol.solve(terminal_grad) - apply_terminal_jac_t(solve_prox(penalty_grad));

  Vector z = Vector::Zero(d);
  Command jac_z(tau, p);  // grad x_tau(u) z for the current z, tracked as CG runs
  Vector residual = rhs;
  Vector direction = residual;
  double res_sq = residual.squaredNorm();
  int iterations = 0;
  constexpr double kResidualTol = 1e-12;

  while (iterations < d && std::sqrt(res_sq) >= kResidualTol) {
    const Command jac_dir = apply_terminal_jac(direction);
    const Vector curvature = terminal_chol.solve(direction) +
                             apply_terminal_jac_t(solve_prox(jac_dir));
    const double step = res_sq / direction.dot(curvature);
    z += step * direction;
    jac_z += step * jac_dir;
    residual -= step * curvature;
    const double next_res_sq = residual.squaredNorm();
    direction = residual + (next_res_sq / res_sq) * direction;
    res_sq = next_res_sq;
    ++iterations;
  }

  Command primal(tau, p);
  primal.flat() = -(jac_z.flat() + penalty_grad.flat());
  primal = solve_prox(primal);

  if (report != nullptr) {
    report->inner_iterations = iterations;
    report->oracle_calls = ctr->total() - before;
    report->accepted_step = gamma;
  }
  return primal;
}

}  // namespace trajopt
