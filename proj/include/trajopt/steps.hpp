#pragma once

#include "trajopt/autodiff.hpp"
#include "trajopt/lqr.hpp"

namespace trajopt {

/// Diagnostics of a single step computation.
struct StepReport {
  double predicted_decrease = 0.0;  // model value drop promised by the step
  double accepted_step = 0.0;       // accepted alpha (rollout steps) or gamma
  int inner_iterations = 0;         // line-search trials / jitter escalations / CG iterations
  long oracle_calls = 0;            // counter delta consumed by the step
};

/// Direction step together with the quantities line searches need: the
/// linearized states produced by the policy rollout and the value of the
/// minimized quadratic model at the step (cost constants included, proximal
/// term excluded).
struct ModelStep {
  Command direction;
  StateSequence linear_states;
  double current_value = 0.0;  // f(u), the model value at v = 0
  double model_value = 0.0;    // model value at the returned direction
};

/// Linear-quadratic expansion of the problem around the tape's trajectory.
LqSubproblem build_lq_subproblem(const ControlProblem& problem,
                                 const ForwardTape& tape, double gamma,
                                 bool with_noise);

/// Value of the quadratic model at (v, y), where y must be the linearized
/// state response to v.  For quadratic costs this equals the convex model
/// h(x + y) + g(u + v).
double quadratic_model_value(const ControlProblem& problem, const ForwardTape& tape,
                             const Command& v, const StateSequence& y);

/// Regularized Gauss-Newton / Levenberg-Marquardt direction from an existing
/// tape: backward pass with the proximal term folded into the control blocks,
/// rollout on the linearized dynamics.
ModelStep ilqr_step_detail(const ControlProblem& problem, const ForwardTape& tape,
                           double gamma);

/// Gaussian-model variant; reduces to ilqr_step_detail when the tape carries
/// no noise derivatives.
ModelStep ilqg_step_detail(const ControlProblem& problem, const ForwardTape& tape,
                           double gamma);

/// Direction v* of the (regularized) iterative-LQR step on the command u.
/// gamma = kInfiniteStep gives the plain Gauss-Newton direction.
Command ilqr_step(const ControlProblem& problem, const Command& u, double gamma,
                  OracleCounter* counter = nullptr);

/// Gaussian-noise counterpart of ilqr_step.  The caller is responsible for
/// the model assumption that the xx, xw and ux second derivatives of the
/// dynamics vanish.
Command ilqg_step(const ControlProblem& problem, const Command& u, double gamma,
                  OracleCounter* counter = nullptr);

struct RolloutLineSearch {
  double shrink = 0.5;     // factor applied to alpha after a rejected trial
  double min_step = 1e-12; // below this the search gives up
};

/// First-order backward pass, then a rollout on the true nonlinear dynamics
/// with feedback u_t + K_t (x_t' - x_t) + alpha k_t, halving alpha until the
/// objective does not increase.  Returns the next command.
Command tassa_ilqg_step(const ControlProblem& problem, const Command& u,
                        const RolloutLineSearch& line_search = {},
                        OracleCounter* counter = nullptr,
                        StepReport* report = nullptr);

struct DdpOptions {
  double lambda0 = 1e-6;      // first jitter added to an indefinite control block
  double lambda_grow = 10.0;  // escalation factor
  double lambda_max = 1e12;   // beyond this the model is declared indefinite
  RolloutLineSearch line_search;
  // Contract the second-order dynamics tensors against the shifted
  // cost-to-go gradient instead of the plain one.  Off by default: the
  // reference formulation rolls with the plain gradient.
  bool shifted_cost_to_go = false;
};

/// Differential-dynamic-programming step: second-order backward pass with a
/// jitter loop on the control blocks, rollout on the true dynamics with an
/// alpha line search.  Returns the next command.
Command ddp_step(const ControlProblem& problem, const Command& u,
                 const DdpOptions& options = {}, OracleCounter* counter = nullptr,
                 StepReport* report = nullptr);

/// Gauss-Newton direction for problems with only a terminal state cost,
/// computed through the d-dimensional dual by conjugate gradient.  Uses at
/// most 2d+1 adjoint/tangent products.  Requires finite gamma, a terminal
/// cost with positive-definite Hessian and quadratic penalties.
Command gn_step_dual(const ControlProblem& problem, const Command& u, double gamma,
                     OracleCounter* counter = nullptr, StepReport* report = nullptr);

}  // namespace trajopt
