#include "trajopt/autodiff.hpp"

namespace trajopt {

ForwardTape record(const ControlProblem& problem, const Command& command,
                   int order, OracleCounter* counter) {
  if (order != 1 && order != 2) {
    throw std::invalid_argument("record order must be 1 or 2");
  }
  if (order == 2 && !problem.has_second_order_dynamics()) {
    throw CapabilityError("order-2 tape requested but dynamics lack second derivatives");
  }

  const int tau = problem.horizon();
  const bool with_noise = problem.noise_dim() > 0;

  ForwardTape tape;
  tape.command_ = command;
  tape.order_ = order;
  tape.counter_ = counter;
  tape.jac_x_.reserve(tau);
  tape.jac_u_.reserve(tau);

  StateSequence states(tau, problem.state_dim());
  Vector x = problem.initial_state();
  for (int t = 0; t < tau; ++t) {
    const auto& map = problem.dynamics(t);
    const auto u_t = command[t];
    tape.jac_x_.push_back(map.jac_x(x, u_t));
    tape.jac_u_.push_back(map.jac_u(x, u_t));
    if (with_noise) {
      tape.jac_w_.push_back(map.jac_w(x, u_t));
      tape.hess_uw_.push_back(map.hess_uw(x, u_t));
    }
    if (order == 2) {
      tape.hess_xx_.push_back(map.hess_xx(x, u_t));
      tape.hess_uu_.push_back(map.hess_uu(x, u_t));
      tape.hess_ux_.push_back(map.hess_ux(x, u_t));
    }
    x = map.evaluate(x, u_t);
    if (!x.allFinite()) throw DivergedTrajectoryError(t);
    states[t] = x;
  }
  tape.trajectory_ = Trajectory(problem.initial_state(), std::move(states));
  if (counter != nullptr) ++counter->tape_recordings;
  return tape;
}

Command adjoint_product(const ForwardTape& tape, const StateSequence& z) {
  const int tau = tape.horizon();
  if (z.count() != tau || z.dim() != tape.state_dim()) {
    throw std::invalid_argument("dual vector shape does not match the tape");
  }
  Command out(tau, tape.control_dim());
  Vector lambda = z[tau - 1];
  out[tau - 1] = tape.jac_u(tau - 1) * lambda;
  for (int t = tau - 2; t >= 0; --t) {
    lambda = tape.jac_x(t + 1) * lambda + z[t];
    out[t] = tape.jac_u(t) * lambda;
  }
  if (tape.counter() != nullptr) ++tape.counter()->adjoint_calls;
  return out;
}

StateSequence tangent_product(const ForwardTape& tape, const Command& v) {
  const int tau = tape.horizon();
  if (v.count() != tau || v.dim() != tape.control_dim()) {
    throw std::invalid_argument("command-shaped vector does not match the tape");
  }
  StateSequence out(tau, tape.state_dim());
  Vector y = Vector::Zero(tape.state_dim());
  for (int t = 0; t < tau; ++t) {
    y = tape.jac_x(t).transpose() * y + tape.jac_u(t).transpose() * v[t];
    out[t] = y;
  }
  if (tape.counter() != nullptr) ++tape.counter()->tangent_calls;
  return out;
}

Command objective_gradient(const ControlProblem& problem, const ForwardTape& tape) {
  const int tau = tape.horizon();
  const Trajectory& traj = tape.trajectory();
  Command grad(tau, tape.control_dim());

  Vector lambda = problem.state_cost(tau).gradient(traj.state(tau));
  grad[tau - 1] = tape.jac_u(tau - 1) * lambda +
                  problem.control_penalty(tau - 1).gradient(tape.command()[tau - 1]);
  for (int t = tau - 2; t >= 0; --t) {
    lambda = problem.state_cost(t + 1).gradient(traj.state(t + 1)) +
             tape.jac_x(t + 1) * lambda;
    grad[t] = tape.jac_u(t) * lambda +
              problem.control_penalty(t).gradient(tape.command()[t]);
  }
  if (tape.counter() != nullptr) ++tape.counter()->adjoint_calls;
  return grad;
}

}  // namespace trajopt
