#pragma once

#include <vector>

#include "trajopt/problem.hpp"

namespace trajopt {

/// Tally of automatic-differentiation work done by a solver run.  A tape
/// recording counts once regardless of the derivative order requested.
struct OracleCounter {
  long adjoint_calls = 0;
  long tangent_calls = 0;
  long tape_recordings = 0;

  long total() const noexcept { return adjoint_calls + tangent_calls + tape_recordings; }
};

/// Rollout trajectory plus the dynamics derivatives evaluated along it.
/// Immutable once recorded; the counter pointer is the owning run's tally and
/// is bumped by the product routines below.
class ForwardTape {
 public:
  int horizon() const noexcept { return static_cast<int>(jac_x_.size()); }
  int state_dim() const noexcept { return trajectory_.state_dim(); }
  int control_dim() const noexcept { return command_.dim(); }
  int order() const noexcept { return order_; }

  const Command& command() const noexcept { return command_; }
  const Trajectory& trajectory() const noexcept { return trajectory_; }

  const Matrix& jac_x(int t) const { return jac_x_[t]; }  // d x d
  const Matrix& jac_u(int t) const { return jac_u_[t]; }  // p x d

  bool has_noise() const noexcept { return !jac_w_.empty(); }
  const Matrix& jac_w(int t) const { return jac_w_[t]; }      // q x d
  const Tensor3& hess_uw(int t) const { return hess_uw_[t]; } // d slices p x q

  bool has_second_order() const noexcept { return order_ >= 2; }
  const Tensor3& hess_xx(int t) const { return hess_xx_[t]; }
  const Tensor3& hess_uu(int t) const { return hess_uu_[t]; }
  const Tensor3& hess_ux(int t) const { return hess_ux_[t]; }

  OracleCounter* counter() const noexcept { return counter_; }

 private:
  friend ForwardTape record(const ControlProblem&, const Command&, int,
                            OracleCounter*);

  Command command_;
  Trajectory trajectory_;
  std::vector<Matrix> jac_x_;
  std::vector<Matrix> jac_u_;
  std::vector<Matrix> jac_w_;
  std::vector<Tensor3> hess_uw_;
  std::vector<Tensor3> hess_xx_;
  std::vector<Tensor3> hess_uu_;
  std::vector<Tensor3> hess_ux_;
  int order_ = 1;
  OracleCounter* counter_ = nullptr;
};

/// Forward pass: rolls out the command and stores the dynamics derivatives at
/// every visited point.  order=2 additionally stores the second-derivative
/// tensors and requires dynamics that expose them.  Noise derivatives are
/// recorded whenever the problem has q > 0.
ForwardTape record(const ControlProblem& problem, const Command& command,
                   int order = 1, OracleCounter* counter = nullptr);

/// Gradient-vector product grad x(u) z for a stacked dual z, by the backward
/// recursion lambda_t = jac_x(t) lambda_{t+1} + z_t (lambda_tau = z_tau) with
/// output block t = jac_u(t) lambda_{t+1}.
Command adjoint_product(const ForwardTape& tape, const StateSequence& z);

/// Transposed product grad x(u)^T v by the forward linearized recursion
/// y_{t+1} = jac_x(t)^T y_t + jac_u(t)^T v_t starting from y_0 = 0.
StateSequence tangent_product(const ForwardTape& tape, const Command& v);

/// grad f(u) = grad x(u) grad h(x) + grad g(u), one backward pass over the
/// tape (counted as one adjoint call).
Command objective_gradient(const ControlProblem& problem, const ForwardTape& tape);

}  // namespace trajopt
