#pragma once

#include "trajopt/problem.hpp"

namespace trajopt {

/// Pendulum swing-up.  State (theta, theta_dot) with theta measured from the
/// hanging position; explicit-Euler discretization with step dt over a total
/// time of total_time seconds.  Terminal cost (pi - theta)^2 +
/// velocity_weight * theta_dot^2, control penalty control_weight * dt * u^2.
struct PendulumParams {
  double mass = 1.0;      // kg
  double length = 1.0;    // m
  double friction = 0.01;
  double gravity = 9.81;  // m/s^2
  double dt = 0.05;       // s
  double total_time = 5.0;        // s, horizon tau = ceil(total_time / dt)
  double velocity_weight = 0.1;   // lambda_1
  double control_weight = 0.01;   // lambda_2
  bool finite_diff_jacobians = false;
};

ControlProblem pendulum_problem(const PendulumParams& params = {});

/// Planar two-joint arm driven by joint torques.  State
/// (theta_1, theta_2, theta_dot_1, theta_dot_2), control in R^2.  Terminal
/// cost ||theta(T) - target||^2 + velocity_weight ||theta_dot(T)||^2, control
/// penalty control_weight * dt * ||u||^2.
struct TwoLinkArmParams {
  double l1 = 0.30;  // m
  double l2 = 0.33;  // m
  double k1 = 0.025; // kg m^2
  double k2 = 0.045; // kg m^2
  double m2 = 1.0;   // kg
  double d2 = 0.16;  // m
  Eigen::Matrix2d friction = (Eigen::Matrix2d() << 0.05, 0.025, 0.025, 0.05).finished();
  Eigen::Vector2d target = Eigen::Vector2d(M_PI / 2.0, M_PI / 2.0);
  double dt = 0.05;
  double total_time = 5.0;
  double velocity_weight = 0.1;  // lambda_1
  double control_weight = 0.01;  // lambda_2
  bool finite_diff_jacobians = false;
};

ControlProblem two_link_arm_problem(const TwoLinkArmParams& params = {});

class PendulumDynamics final : public DynamicsMap {
 public:
  explicit PendulumDynamics(const PendulumParams& params) : p_(params) {}

  int state_dim() const override { return 2; }
  int control_dim() const override { return 1; }

  Vector evaluate(const Eigen::Ref<const Vector>& x,
                  const Eigen::Ref<const Vector>& u) const override;
  Matrix jac_x(const Eigen::Ref<const Vector>& x,
               const Eigen::Ref<const Vector>& u) const override;
  Matrix jac_u(const Eigen::Ref<const Vector>& x,
               const Eigen::Ref<const Vector>& u) const override;

  bool has_hessians() const override { return true; }
  Tensor3 hess_xx(const Eigen::Ref<const Vector>& x,
                  const Eigen::Ref<const Vector>& u) const override;
  Tensor3 hess_uu(const Eigen::Ref<const Vector>& x,
                  const Eigen::Ref<const Vector>& u) const override;
  Tensor3 hess_ux(const Eigen::Ref<const Vector>& x,
                  const Eigen::Ref<const Vector>& u) const override;

 private:
  PendulumParams p_;
};

class TwoLinkArmDynamics final : public DynamicsMap {
 public:
  explicit TwoLinkArmDynamics(const TwoLinkArmParams& params);

  int state_dim() const override { return 4; }
  int control_dim() const override { return 2; }

  Vector evaluate(const Eigen::Ref<const Vector>& x,
                  const Eigen::Ref<const Vector>& u) const override;
  Matrix jac_x(const Eigen::Ref<const Vector>& x,
               const Eigen::Ref<const Vector>& u) const override;
  Matrix jac_u(const Eigen::Ref<const Vector>& x,
               const Eigen::Ref<const Vector>& u) const override;

  // Second derivatives by central differences of the closed-form Jacobians.
  bool has_hessians() const override { return true; }
  Tensor3 hess_xx(const Eigen::Ref<const Vector>& x,
                  const Eigen::Ref<const Vector>& u) const override;
  Tensor3 hess_uu(const Eigen::Ref<const Vector>& x,
                  const Eigen::Ref<const Vector>& u) const override;
  Tensor3 hess_ux(const Eigen::Ref<const Vector>& x,
                  const Eigen::Ref<const Vector>& u) const override;

  Eigen::Matrix2d inertia(double theta2) const;       // M(theta)
  Eigen::Vector2d coriolis(const Eigen::Vector2d& theta,
                           const Eigen::Vector2d& theta_dot) const;

 private:
  TwoLinkArmParams p_;
  double a1_, a2_, a3_;
};

/// Random linear-quadratic test problem: time-varying linear dynamics with
/// spectral norm of the state matrix capped, PSD tracking state costs and PD
/// control penalties.  Deterministic for a fixed seed.
ControlProblem random_lq_problem(int horizon, int state_dim, int control_dim,
                                 unsigned seed, double spectral_cap = 0.9);

}  // namespace trajopt
