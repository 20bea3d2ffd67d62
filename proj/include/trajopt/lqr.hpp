#pragma once

#include <vector>

#include "trajopt/types.hpp"
#include "trajopt/problem.hpp"

namespace trajopt {

/// Linear-quadratic subproblem in deviation variables: linear dynamics
/// y_{t+1} = jac_x[t]^T y_t + jac_u[t]^T v_t from y_0 = 0, quadratic state
/// costs for t = 1..tau (stored at index t-1) and strongly convex quadratic
/// control costs for t = 0..tau-1.  A finite gamma adds the proximal term
/// (1/2 gamma) ||v_t||^2 to every control cost; gamma = kInfiniteStep
/// disables it.
///
/// The optional noise data (jac_w, hess_uw) turns the problem into its
/// Gaussian counterpart handled by lqg_backward.
struct LqSubproblem {
  int horizon = 0;
  int state_dim = 0;
  int control_dim = 0;

  std::vector<Matrix> jac_x;  // tau, d x d (gradient convention)
  std::vector<Matrix> jac_u;  // tau, p x d

  std::vector<Vector> state_grad;   // tau, index i holds h_{i+1,x}
  std::vector<Matrix> state_hess;   // tau, PSD
  std::vector<Vector> control_grad; // tau
  std::vector<Matrix> control_hess; // tau, PD

  double gamma = kInfiniteStep;

  std::vector<Matrix> jac_w;     // tau, q x d; empty when deterministic
  std::vector<Tensor3> hess_uw;  // tau, d slices of p x q; empty when deterministic

  bool has_noise() const noexcept { return !jac_w.empty(); }
  void validate() const;
};

/// Affine policy v_t(y) = gains[t] y + offsets[t].
struct FeedbackPolicy {
  std::vector<Matrix> gains;    // tau, p x d
  std::vector<Vector> offsets;  // tau, p
};

/// Quadratic cost-to-go parameters 1/2 y^T hessians[t] y + gradients[t]^T y
/// for t = 0..tau (constant terms dropped; they never move the minimizer).
struct CostToGo {
  std::vector<Matrix> hessians;   // tau+1, d x d, PSD
  std::vector<Vector> gradients;  // tau+1, d
};

struct LqSolution {
  FeedbackPolicy policy;
  CostToGo cost_to_go;
};

/// Backward Riccati recursion.  Throws IllConditionedSubproblemError when a
/// control-block Hessian fails its Cholesky factorization; recovery (jitter,
/// step shrinking) is the caller's decision.
LqSolution lq_backward(const LqSubproblem& sub);

struct LqRolloutResult {
  Command controls;      // v*, tau blocks of p
  StateSequence states;  // y_1..y_tau under the linearized dynamics
};

/// Forward pass applying the policy to the linearized dynamics from y_0 = 0.
LqRolloutResult lq_rollout(const LqSubproblem& sub, const FeedbackPolicy& policy);

/// Gaussian-noise backward pass: identical recursion with the noise-induced
/// corrections added to the control-block terms.  Requires the subproblem's
/// noise data; without it the result equals lq_backward.
LqSolution lqg_backward(const LqSubproblem& sub);

}  // namespace trajopt
