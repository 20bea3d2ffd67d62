#include "trajopt/problem.hpp"

#include <cmath>
#include <random>

namespace trajopt {

// ---------------------------------------------------------------------------
// Costs
// ---------------------------------------------------------------------------

QuadraticCost::QuadraticCost(Matrix weight, Vector target)
    : weight_(std::move(weight)), target_(std::move(target)) {
  if (weight_.rows() != weight_.cols() || weight_.rows() != target_.size()) {
    throw std::invalid_argument("quadratic cost dimension mismatch");
  }
  weight_ = 0.5 * (weight_ + weight_.transpose().eval());
}

double QuadraticCost::value(const Eigen::Ref<const Vector>& z) const {
  const Vector r = z - target_;
  return 0.5 * r.dot(weight_ * r);
}

Vector QuadraticCost::gradient(const Eigen::Ref<const Vector>& z) const {
  return weight_ * (z - target_);
}

Matrix QuadraticCost::hessian(const Eigen::Ref<const Vector>&) const {
  return weight_;
}

// ---------------------------------------------------------------------------
// Dynamics
// ---------------------------------------------------------------------------

Matrix contract_output(const Tensor3& tensor, const Eigen::Ref<const Vector>& c) {
  if (tensor.empty()) return Matrix();
  if (static_cast<Eigen::Index>(tensor.size()) != c.size()) {
    throw std::invalid_argument("tensor contraction dimension mismatch");
  }
  Matrix out = Matrix::Zero(tensor[0].rows(), tensor[0].cols());
  for (size_t k = 0; k < tensor.size(); ++k) {
    out.noalias() += c[static_cast<Eigen::Index>(k)] * tensor[k];
  }
  return out;
}

Vector DynamicsMap::evaluate_noisy(const Eigen::Ref<const Vector>& x,
                                   const Eigen::Ref<const Vector>& u,
                                   const Eigen::Ref<const Vector>& w) const {
  if (noise_dim() != 0) {
    throw CapabilityError("dynamics map declares noise but does not implement evaluate_noisy");
  }
  if (w.size() != 0) {
    throw std::invalid_argument("noise passed to a deterministic dynamics map");
  }
  return evaluate(x, u);
}

Matrix DynamicsMap::jac_w(const Eigen::Ref<const Vector>&,
                          const Eigen::Ref<const Vector>&) const {
  if (noise_dim() != 0) {
    throw CapabilityError("dynamics map declares noise but does not implement jac_w");
  }
  return Matrix::Zero(0, state_dim());
}

namespace {
Tensor3 zero_tensor(int slices, int rows, int cols) {
  return Tensor3(static_cast<size_t>(slices), Matrix::Zero(rows, cols));
}
}  // namespace

Tensor3 DynamicsMap::hess_xx(const Eigen::Ref<const Vector>&,
                             const Eigen::Ref<const Vector>&) const {
  throw CapabilityError("dynamics map does not expose second derivatives");
}

Tensor3 DynamicsMap::hess_uu(const Eigen::Ref<const Vector>&,
                             const Eigen::Ref<const Vector>&) const {
  throw CapabilityError("dynamics map does not expose second derivatives");
}

Tensor3 DynamicsMap::hess_ux(const Eigen::Ref<const Vector>&,
                             const Eigen::Ref<const Vector>&) const {
  throw CapabilityError("dynamics map does not expose second derivatives");
}

Tensor3 DynamicsMap::hess_uw(const Eigen::Ref<const Vector>&,
                             const Eigen::Ref<const Vector>&) const {
  return zero_tensor(state_dim(), control_dim(), noise_dim());
}

LinearDynamics::LinearDynamics(Matrix a, Matrix b)
    : LinearDynamics(std::move(a), std::move(b), Matrix()) {}

LinearDynamics::LinearDynamics(Matrix a, Matrix b, Matrix noise_gain)
    : a_(std::move(a)), b_(std::move(b)), noise_gain_(std::move(noise_gain)) {
  if (noise_gain_.size() == 0) noise_gain_ = Matrix::Zero(a_.rows(), 0);
  if (a_.rows() != a_.cols() || b_.rows() != a_.rows() ||
      noise_gain_.rows() != a_.rows()) {
    throw std::invalid_argument("linear dynamics dimension mismatch");
  }
}

Vector LinearDynamics::evaluate(const Eigen::Ref<const Vector>& x,
                                const Eigen::Ref<const Vector>& u) const {
  return a_ * x + b_ * u;
}

Vector LinearDynamics::evaluate_noisy(const Eigen::Ref<const Vector>& x,
                                      const Eigen::Ref<const Vector>& u,
                                      const Eigen::Ref<const Vector>& w) const {
  return a_ * x + b_ * u + noise_gain_ * w;
}

Tensor3 LinearDynamics::hess_xx(const Eigen::Ref<const Vector>&,
                                const Eigen::Ref<const Vector>&) const {
  return zero_tensor(state_dim(), state_dim(), state_dim());
}

Tensor3 LinearDynamics::hess_uu(const Eigen::Ref<const Vector>&,
                                const Eigen::Ref<const Vector>&) const {
  return zero_tensor(state_dim(), control_dim(), control_dim());
}

Tensor3 LinearDynamics::hess_ux(const Eigen::Ref<const Vector>&,
                                const Eigen::Ref<const Vector>&) const {
  return zero_tensor(state_dim(), control_dim(), state_dim());
}

// ---------------------------------------------------------------------------
// Problem
// ---------------------------------------------------------------------------

ControlProblem::ControlProblem(Vector initial_state,
                               std::vector<DynamicsPtr> dynamics,
                               std::vector<CostPtr> state_costs,
                               std::vector<CostPtr> control_penalties)
    : initial_state_(std::move(initial_state)),
      dynamics_(std::move(dynamics)),
      state_costs_(std::move(state_costs)),
      control_penalties_(std::move(control_penalties)) {
  const size_t tau = dynamics_.size();
  if (tau == 0) throw std::invalid_argument("horizon must be positive");
  if (state_costs_.size() != tau || control_penalties_.size() != tau) {
    throw std::invalid_argument("cost sequences must have length tau");
  }
  const int d = static_cast<int>(initial_state_.size());
  for (const auto& map : dynamics_) {
    if (!map) throw std::invalid_argument("null dynamics map");
    if (map->state_dim() != d) {
      throw std::invalid_argument("dynamics state dimension mismatch");
    }
  }
  control_dim_ = dynamics_[0]->control_dim();
  noise_dim_ = dynamics_[0]->noise_dim();
  for (const auto& map : dynamics_) {
    if (map->control_dim() != control_dim_ || map->noise_dim() != noise_dim_) {
      throw std::invalid_argument("dynamics control/noise dimension mismatch");
    }
  }
  for (const auto& cost : state_costs_) {
    if (!cost || cost->dim() != d) {
      throw std::invalid_argument("state cost dimension mismatch");
    }
  }
  for (const auto& penalty : control_penalties_) {
    if (!penalty || penalty->dim() != control_dim_) {
      throw std::invalid_argument("control penalty dimension mismatch");
    }
  }
}

ControlProblem ControlProblem::time_invariant(Vector initial_state,
                                              DynamicsPtr dynamics, int horizon,
                                              CostPtr running_state_cost,
                                              CostPtr terminal_state_cost,
                                              CostPtr control_penalty) {
  std::vector<DynamicsPtr> maps(static_cast<size_t>(horizon), dynamics);
  std::vector<CostPtr> state_costs(static_cast<size_t>(horizon), running_state_cost);
  state_costs.back() = std::move(terminal_state_cost);
  std::vector<CostPtr> penalties(static_cast<size_t>(horizon), control_penalty);
  return ControlProblem(std::move(initial_state), std::move(maps),
                        std::move(state_costs), std::move(penalties));
}

bool ControlProblem::has_second_order_dynamics() const {
  for (const auto& map : dynamics_) {
    if (!map->has_hessians()) return false;
  }
  return true;
}

bool ControlProblem::is_last_state_only() const {
  for (size_t i = 0; i + 1 < state_costs_.size(); ++i) {
    if (!state_costs_[i]->is_zero()) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Rollout and objective
// ---------------------------------------------------------------------------

namespace {

void check_command(const ControlProblem& problem, const Command& command) {
  if (command.count() != problem.horizon() || command.dim() != problem.control_dim()) {
    throw std::invalid_argument("command shape does not match the problem");
  }
}

}  // namespace

Trajectory rollout(const ControlProblem& problem, const Command& command) {
  check_command(problem, command);
  const int tau = problem.horizon();
  StateSequence states(tau, problem.state_dim());
  Vector x = problem.initial_state();
  for (int t = 0; t < tau; ++t) {
    x = problem.dynamics(t).evaluate(x, command[t]);
    if (!x.allFinite()) throw DivergedTrajectoryError(t);
    states[t] = x;
  }
  return Trajectory(problem.initial_state(), std::move(states));
}

Trajectory noisy_rollout(const ControlProblem& problem, const Command& command,
                         const NoiseSequence& noise) {
  check_command(problem, command);
  if (noise.count() != problem.horizon() || noise.dim() != problem.noise_dim()) {
    throw std::invalid_argument("noise sequence shape does not match the problem");
  }
  const int tau = problem.horizon();
  StateSequence states(tau, problem.state_dim());
  Vector x = problem.initial_state();
  for (int t = 0; t < tau; ++t) {
    x = problem.dynamics(t).evaluate_noisy(x, command[t], noise[t]);
    if (!x.allFinite()) throw DivergedTrajectoryError(t);
    states[t] = x;
  }
  return Trajectory(problem.initial_state(), std::move(states));
}

double total_cost(const ControlProblem& problem, const Trajectory& trajectory,
                  const Command& command) {
  const int tau = problem.horizon();
  double cost = 0.0;
  for (int t = 1; t <= tau; ++t) {
    cost += problem.state_cost(t).value(trajectory.state(t));
  }
  for (int t = 0; t < tau; ++t) {
    cost += problem.control_penalty(t).value(command[t]);
  }
  return cost;
}

double objective(const ControlProblem& problem, const Command& command) {
  return total_cost(problem, rollout(problem, command), command);
}

MonteCarloEstimate monte_carlo_objective(const ControlProblem& problem,
                                         const Command& command, int n_samples,
                                         unsigned seed) {
  if (problem.noise_dim() == 0) {
    throw std::invalid_argument("monte_carlo_objective requires a noisy problem (q > 0)");
  }
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");

  const int tau = problem.horizon();
  const int q = problem.noise_dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  double penalty = 0.0;
  for (int t = 0; t < tau; ++t) {
    penalty += problem.control_penalty(t).value(command[t]);
  }

  // Welford accumulation: exact zero spread when every sample coincides.
  double mean = 0.0;
  double sq_dev = 0.0;
  NoiseSequence noise(tau, q);
  for (int s = 0; s < n_samples; ++s) {
    for (Eigen::Index i = 0; i < noise.flat().size(); ++i) {
      noise.flat()[i] = gauss(rng);
    }
    const Trajectory traj = noisy_rollout(problem, command, noise);
    double state_cost = 0.0;
    for (int t = 1; t <= tau; ++t) {
      state_cost += problem.state_cost(t).value(traj.state(t));
    }
    const double delta = state_cost - mean;
    mean += delta / (s + 1);
    sq_dev += delta * (state_cost - mean);
  }

  double std_err = 0.0;
  if (n_samples > 1) {
    std_err = std::sqrt(sq_dev / (n_samples - 1) / n_samples);
  }
  return {mean + penalty, std_err};
}

StateSequence state_cost_gradients(const ControlProblem& problem,
                                   const Trajectory& trajectory) {
  StateSequence grads(problem.horizon(), problem.state_dim());
  for (int t = 1; t <= problem.horizon(); ++t) {
    grads[t - 1] = problem.state_cost(t).gradient(trajectory.state(t));
  }
  return grads;
}

Command control_penalty_gradients(const ControlProblem& problem,
                                  const Command& command) {
  Command grads(problem.horizon(), problem.control_dim());
  for (int t = 0; t < problem.horizon(); ++t) {
    grads[t] = problem.control_penalty(t).gradient(command[t]);
  }
  return grads;
}

}  // namespace trajopt
