#pragma once

#include <memory>
#include <vector>

#include "trajopt/types.hpp"

namespace trajopt {

// ---------------------------------------------------------------------------
// Costs
// ---------------------------------------------------------------------------

/// Convex stage cost with first and second derivatives.
class CostFunction {
 public:
  virtual ~CostFunction() = default;

  virtual int dim() const = 0;
  virtual double value(const Eigen::Ref<const Vector>& z) const = 0;
  virtual Vector gradient(const Eigen::Ref<const Vector>& z) const = 0;
  /// Symmetric PSD at every query point.
  virtual Matrix hessian(const Eigen::Ref<const Vector>& z) const = 0;

  /// True when the cost is identically zero (used for structural checks).
  virtual bool is_zero() const { return false; }
};

using CostPtr = std::shared_ptr<const CostFunction>;

/// 1/2 (z - target)^T Q (z - target) with symmetric Q.
class QuadraticCost final : public CostFunction {
 public:
  QuadraticCost(Matrix weight, Vector target);

  int dim() const override { return static_cast<int>(target_.size()); }
  double value(const Eigen::Ref<const Vector>& z) const override;
  Vector gradient(const Eigen::Ref<const Vector>& z) const override;
  Matrix hessian(const Eigen::Ref<const Vector>& z) const override;

  const Matrix& weight() const noexcept { return weight_; }
  const Vector& target() const noexcept { return target_; }

 private:
  Matrix weight_;
  Vector target_;
};

/// b^T z + c.
class LinearCost final : public CostFunction {
 public:
  explicit LinearCost(Vector slope, double offset = 0.0)
      : slope_(std::move(slope)), offset_(offset) {}

  int dim() const override { return static_cast<int>(slope_.size()); }
  double value(const Eigen::Ref<const Vector>& z) const override {
    return slope_.dot(z) + offset_;
  }
  Vector gradient(const Eigen::Ref<const Vector>&) const override { return slope_; }
  Matrix hessian(const Eigen::Ref<const Vector>&) const override {
    return Matrix::Zero(slope_.size(), slope_.size());
  }

 private:
  Vector slope_;
  double offset_;
};

class ZeroCost final : public CostFunction {
 public:
  explicit ZeroCost(int dim) : dim_(dim) {}

  int dim() const override { return dim_; }
  double value(const Eigen::Ref<const Vector>&) const override { return 0.0; }
  Vector gradient(const Eigen::Ref<const Vector>&) const override {
    return Vector::Zero(dim_);
  }
  Matrix hessian(const Eigen::Ref<const Vector>&) const override {
    return Matrix::Zero(dim_, dim_);
  }
  bool is_zero() const override { return true; }

 private:
  int dim_;
};

// ---------------------------------------------------------------------------
// Dynamics
// ---------------------------------------------------------------------------

/// Rank-3 derivative tensor stored as one matrix slice per output component:
/// tensor[k](i, j) = d^2 phi_k / (da_i db_j).
using Tensor3 = std::vector<Matrix>;

/// Contraction of the output index against a vector: sum_k c_k tensor[k].
Matrix contract_output(const Tensor3& tensor, const Eigen::Ref<const Vector>& c);

/// One step of the dynamics x_{t+1} = phi_t(x_t, u_t[, w_t]).
///
/// Derivatives use the gradient convention throughout the library: jac_x is
/// the d-by-d matrix with entry (i, j) = d phi_j / d x_i, i.e. the transpose
/// of the forward Jacobian, so it multiplies adjoint vectors on the left.
/// For noisy maps all derivatives are taken at w = 0.
class DynamicsMap {
 public:
  virtual ~DynamicsMap() = default;

  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;
  virtual int noise_dim() const { return 0; }

  virtual Vector evaluate(const Eigen::Ref<const Vector>& x,
                          const Eigen::Ref<const Vector>& u) const = 0;
  virtual Vector evaluate_noisy(const Eigen::Ref<const Vector>& x,
                                const Eigen::Ref<const Vector>& u,
                                const Eigen::Ref<const Vector>& w) const;

  virtual Matrix jac_x(const Eigen::Ref<const Vector>& x,
                       const Eigen::Ref<const Vector>& u) const = 0;  // d x d
  virtual Matrix jac_u(const Eigen::Ref<const Vector>& x,
                       const Eigen::Ref<const Vector>& u) const = 0;  // p x d
  virtual Matrix jac_w(const Eigen::Ref<const Vector>& x,
                       const Eigen::Ref<const Vector>& u) const;  // q x d

  virtual bool has_hessians() const { return false; }
  virtual Tensor3 hess_xx(const Eigen::Ref<const Vector>& x,
                          const Eigen::Ref<const Vector>& u) const;  // d slices d x d
  virtual Tensor3 hess_uu(const Eigen::Ref<const Vector>& x,
                          const Eigen::Ref<const Vector>& u) const;  // d slices p x p
  virtual Tensor3 hess_ux(const Eigen::Ref<const Vector>& x,
                          const Eigen::Ref<const Vector>& u) const;  // d slices p x d
  /// Control-noise cross derivative; defaults to zero (additive noise).
  virtual Tensor3 hess_uw(const Eigen::Ref<const Vector>& x,
                          const Eigen::Ref<const Vector>& u) const;  // d slices p x q
};

using DynamicsPtr = std::shared_ptr<const DynamicsMap>;

/// x' = A x + B u (+ W w).  Stores the forward matrices.
class LinearDynamics final : public DynamicsMap {
 public:
  LinearDynamics(Matrix a, Matrix b);
  LinearDynamics(Matrix a, Matrix b, Matrix noise_gain);

  int state_dim() const override { return static_cast<int>(a_.rows()); }
  int control_dim() const override { return static_cast<int>(b_.cols()); }
  int noise_dim() const override { return static_cast<int>(noise_gain_.cols()); }

  Vector evaluate(const Eigen::Ref<const Vector>& x,
                  const Eigen::Ref<const Vector>& u) const override;
  Vector evaluate_noisy(const Eigen::Ref<const Vector>& x,
                        const Eigen::Ref<const Vector>& u,
                        const Eigen::Ref<const Vector>& w) const override;

  Matrix jac_x(const Eigen::Ref<const Vector>&,
               const Eigen::Ref<const Vector>&) const override {
    return a_.transpose();
  }
  Matrix jac_u(const Eigen::Ref<const Vector>&,
               const Eigen::Ref<const Vector>&) const override {
    return b_.transpose();
  }
  Matrix jac_w(const Eigen::Ref<const Vector>&,
               const Eigen::Ref<const Vector>&) const override {
    return noise_gain_.transpose();
  }

  bool has_hessians() const override { return true; }
  Tensor3 hess_xx(const Eigen::Ref<const Vector>&,
                  const Eigen::Ref<const Vector>&) const override;
  Tensor3 hess_uu(const Eigen::Ref<const Vector>&,
                  const Eigen::Ref<const Vector>&) const override;
  Tensor3 hess_ux(const Eigen::Ref<const Vector>&,
                  const Eigen::Ref<const Vector>&) const override;

  const Matrix& forward_state_matrix() const noexcept { return a_; }
  const Matrix& forward_control_matrix() const noexcept { return b_; }

 private:
  Matrix a_;           // d x d
  Matrix b_;           // d x p
  Matrix noise_gain_;  // d x q  (d x 0 when deterministic)
};

// ---------------------------------------------------------------------------
// Problem
// ---------------------------------------------------------------------------

/// Discrete-time control problem over a fixed horizon: dynamics for
/// t = 0..tau-1, state costs h_t for t = 1..tau, control penalties g_t for
/// t = 0..tau-1.  Immutable after construction and safe to share.
class ControlProblem {
 public:
  ControlProblem(Vector initial_state, std::vector<DynamicsPtr> dynamics,
                 std::vector<CostPtr> state_costs,
                 std::vector<CostPtr> control_penalties);

  /// Same dynamics map and running costs at every step.
  static ControlProblem time_invariant(Vector initial_state, DynamicsPtr dynamics,
                                       int horizon, CostPtr running_state_cost,
                                       CostPtr terminal_state_cost,
                                       CostPtr control_penalty);

  int horizon() const noexcept { return static_cast<int>(dynamics_.size()); }
  int state_dim() const noexcept { return static_cast<int>(initial_state_.size()); }
  int control_dim() const noexcept { return control_dim_; }
  int noise_dim() const noexcept { return noise_dim_; }

  const Vector& initial_state() const noexcept { return initial_state_; }
  const DynamicsMap& dynamics(int t) const { return *dynamics_[t]; }         // t in [0, tau)
  const CostFunction& state_cost(int t) const { return *state_costs_[t - 1]; }  // t in [1, tau]
  const CostFunction& control_penalty(int t) const { return *control_penalties_[t]; }

  // Shared handles, for assembling derived problems.
  const DynamicsPtr& dynamics_ptr(int t) const { return dynamics_[t]; }
  const CostPtr& state_cost_ptr(int t) const { return state_costs_[t - 1]; }
  const CostPtr& control_penalty_ptr(int t) const { return control_penalties_[t]; }

  bool has_second_order_dynamics() const;
  /// True when every state cost before the terminal one is identically zero.
  bool is_last_state_only() const;

 private:
  Vector initial_state_;
  std::vector<DynamicsPtr> dynamics_;
  std::vector<CostPtr> state_costs_;
  std::vector<CostPtr> control_penalties_;
  int control_dim_ = 0;
  int noise_dim_ = 0;
};

// ---------------------------------------------------------------------------
// Rollout and objective
// ---------------------------------------------------------------------------

/// Roll the command through the exact dynamics from the stored initial state.
/// Throws DivergedTrajectoryError when a step produces a non-finite state.
Trajectory rollout(const ControlProblem& problem, const Command& command);

/// Rollout through the noisy dynamics; with zero noise identical to rollout().
Trajectory noisy_rollout(const ControlProblem& problem, const Command& command,
                         const NoiseSequence& noise);

/// Total cost sum_t h_t(x_t) + sum_t g_t(u_t) along an already computed
/// trajectory.
double total_cost(const ControlProblem& problem, const Trajectory& trajectory,
                  const Command& command);

/// f(u) = h(x(u)) + g(u).
double objective(const ControlProblem& problem, const Command& command);

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_err = 0.0;
};

/// Sample mean of the state cost under i.i.d. standard-normal noise plus the
/// deterministic control penalty.  Reproducible for a fixed seed.
MonteCarloEstimate monte_carlo_objective(const ControlProblem& problem,
                                         const Command& command, int n_samples,
                                         unsigned seed);

/// Stacked state-cost gradients (grad h_1(x_1); ...; grad h_tau(x_tau)).
StateSequence state_cost_gradients(const ControlProblem& problem,
                                   const Trajectory& trajectory);

/// Stacked control-penalty gradients (grad g_0(u_0); ...; grad g_{tau-1}).
Command control_penalty_gradients(const ControlProblem& problem,
                                  const Command& command);

}  // namespace trajopt
