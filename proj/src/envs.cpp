#include "trajopt/envs.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <random>

#include "trajopt/finite_diff.hpp"

namespace trajopt {

namespace {

int steps_for(double total_time, double dt) {
  return static_cast<int>(std::ceil(total_time / dt));
}

}  // namespace

// ---------------------------------------------------------------------------
// Pendulum
// ---------------------------------------------------------------------------

Vector PendulumDynamics::evaluate(const Eigen::Ref<const Vector>& x,
                                  const Eigen::Ref<const Vector>& u) const {
  const double ml2 = p_.mass * p_.length * p_.length;
  const double accel = -(p_.gravity / p_.length) * std::sin(x[0]) -
                       (p_.friction / ml2) * x[1] + u[0] / ml2;
  Vector next(2);
  next[0] = x[0] + p_.dt * x[1];
  next[1] = x[1] + p_.dt * accel;
  return next;
}

Matrix PendulumDynamics::jac_x(const Eigen::Ref<const Vector>& x,
                               const Eigen::Ref<const Vector>& u) const {
  if (p_.finite_diff_jacobians) return finite_diff_jac_x(*this, x, u);
  const double ml2 = p_.mass * p_.length * p_.length;
  Matrix jac(2, 2);  // (i, j) = d phi_j / d x_i
  jac(0, 0) = 1.0;
  jac(0, 1) = -p_.dt * (p_.gravity / p_.length) * std::cos(x[0]);
  jac(1, 0) = p_.dt;
  jac(1, 1) = 1.0 - p_.dt * p_.friction / ml2;
  return jac;
}

Matrix PendulumDynamics::jac_u(const Eigen::Ref<const Vector>& x,
                               const Eigen::Ref<const Vector>& u) const {
  if (p_.finite_diff_jacobians) return finite_diff_jac_u(*this, x, u);
  const double ml2 = p_.mass * p_.length * p_.length;
  Matrix jac(1, 2);
  jac(0, 0) = 0.0;
  jac(0, 1) = p_.dt / ml2;
  return jac;
}

Tensor3 PendulumDynamics::hess_xx(const Eigen::Ref<const Vector>& x,
                                  const Eigen::Ref<const Vector>&) const {
  Tensor3 tensor(2, Matrix::Zero(2, 2));
  tensor[1](0, 0) = p_.dt * (p_.gravity / p_.length) * std::sin(x[0]);
  return tensor;
}

Tensor3 PendulumDynamics::hess_uu(const Eigen::Ref<const Vector>&,
                                  const Eigen::Ref<const Vector>&) const {
  return Tensor3(2, Matrix::Zero(1, 1));
}

Tensor3 PendulumDynamics::hess_ux(const Eigen::Ref<const Vector>&,
                                  const Eigen::Ref<const Vector>&) const {
  return Tensor3(2, Matrix::Zero(1, 2));
}

ControlProblem pendulum_problem(const PendulumParams& params) {
  if (params.mass <= 0 || params.length <= 0 || params.gravity <= 0 ||
      params.dt <= 0 || params.total_time <= 0 || params.friction < 0 ||
      params.velocity_weight <= 0 || params.control_weight <= 0) {
    throw std::invalid_argument("pendulum parameters out of range");
  }
  const int tau = steps_for(params.total_time, params.dt);
  const auto dynamics = std::make_shared<PendulumDynamics>(params);

  Matrix terminal_weight = Matrix::Zero(2, 2);
  terminal_weight(0, 0) = 2.0;
  terminal_weight(1, 1) = 2.0 * params.velocity_weight;
  Vector terminal_target(2);
  terminal_target << M_PI, 0.0;

  Matrix control_weight(1, 1);
  control_weight(0, 0) = 2.0 * params.control_weight * params.dt;

  return ControlProblem::time_invariant(
      Vector::Zero(2), dynamics, tau, std::make_shared<ZeroCost>(2),
      std::make_shared<QuadraticCost>(terminal_weight, terminal_target),
      std::make_shared<QuadraticCost>(control_weight, Vector::Zero(1)));
}

// ---------------------------------------------------------------------------
// Two-link arm
// ---------------------------------------------------------------------------

TwoLinkArmDynamics::TwoLinkArmDynamics(const TwoLinkArmParams& params)
    : p_(params),
      a1_(params.k1 + params.k2 + params.m2 * params.l1 * params.l1),
      a2_(params.m2 * params.l1 * params.d2),
      a3_(params.k2) {
  if (a1_ <= 0 || a2_ <= 0 || a3_ <= 0 || params.dt <= 0 || params.total_time <= 0) {
    throw std::invalid_argument("arm parameters out of range");
  }
}

Eigen::Matrix2d TwoLinkArmDynamics::inertia(double theta2) const {
  const double c2 = std::cos(theta2);
  Eigen::Matrix2d m;
  m << a1_ + 2.0 * a2_ * c2, a3_ + a2_ * c2, a3_ + a2_ * c2, a3_;
  return m;
}

Eigen::Vector2d TwoLinkArmDynamics::coriolis(const Eigen::Vector2d& theta,
                                             const Eigen::Vector2d& theta_dot) const {
  Eigen::Vector2d c;
  c << -theta_dot[1] * (2.0 * theta_dot[0] + theta_dot[1]),
      theta_dot[0] * theta_dot[0];
  return a2_ * std::sin(theta[1]) * c;
}

Vector TwoLinkArmDynamics::evaluate(const Eigen::Ref<const Vector>& x,
                                    const Eigen::Ref<const Vector>& u) const {
  const Eigen::Vector2d theta = x.head<2>();
  const Eigen::Vector2d theta_dot = x.tail<2>();
  const Eigen::Vector2d torque = u - coriolis(theta, theta_dot) - p_.friction * theta_dot;
  const Eigen::Vector2d accel = inertia(theta[1]).ldlt().solve(torque);
  Vector next(4);
  next.head<2>() = theta + p_.dt * theta_dot;
  next.tail<2>() = theta_dot + p_.dt * accel;
  return next;
}

Matrix TwoLinkArmDynamics::jac_x(const Eigen::Ref<const Vector>& x,
                                 const Eigen::Ref<const Vector>& u) const {
  if (p_.finite_diff_jacobians) return finite_diff_jac_x(*this, x, u);
  const Eigen::Vector2d theta = x.head<2>();
  const Eigen::Vector2d theta_dot = x.tail<2>();
  const double s2 = std::sin(theta[1]);
  const double c2 = std::cos(theta[1]);

  const Eigen::Matrix2d inertia_inv = inertia(theta[1]).inverse();
  const Eigen::Vector2d accel =
      inertia_inv * (u - coriolis(theta, theta_dot) - p_.friction * theta_dot);

  // d M / d theta_2 and d C / d theta_2.
  Eigen::Matrix2d inertia_d2;
  inertia_d2 << -2.0 * a2_ * s2, -a2_ * s2, -a2_ * s2, 0.0;
  Eigen::Vector2d coriolis_d2;
  coriolis_d2 << -theta_dot[1] * (2.0 * theta_dot[0] + theta_dot[1]),
      theta_dot[0] * theta_dot[0];
  coriolis_d2 *= a2_ * c2;

  // d C / d theta_dot columns.
  Eigen::Matrix2d coriolis_dvel;
  coriolis_dvel.col(0) =
      a2_ * s2 * Eigen::Vector2d(-2.0 * theta_dot[1], 2.0 * theta_dot[0]);
  coriolis_dvel.col(1) =
      a2_ * s2 * Eigen::Vector2d(-2.0 * theta_dot[0] - 2.0 * theta_dot[1], 0.0);

  Eigen::Matrix2d accel_dtheta = Eigen::Matrix2d::Zero();
  accel_dtheta.col(1) = inertia_inv * (-coriolis_d2 - inertia_d2 * accel);
  const Eigen::Matrix2d accel_dvel = inertia_inv * (-coriolis_dvel - p_.friction);

  Eigen::Matrix4d forward = Eigen::Matrix4d::Zero();
  forward.topLeftCorner<2, 2>() = Eigen::Matrix2d::Identity();
  forward.topRightCorner<2, 2>() = p_.dt * Eigen::Matrix2d::Identity();
  forward.bottomLeftCorner<2, 2>() = p_.dt * accel_dtheta;
  forward.bottomRightCorner<2, 2>() =
      Eigen::Matrix2d::Identity() + p_.dt * accel_dvel;
  return forward.transpose();
}

Matrix TwoLinkArmDynamics::jac_u(const Eigen::Ref<const Vector>& x,
                                 const Eigen::Ref<const Vector>& u) const {
  if (p_.finite_diff_jacobians) return finite_diff_jac_u(*this, x, u);
  Eigen::Matrix<double, 4, 2> forward = Eigen::Matrix<double, 4, 2>::Zero();
  forward.bottomRows<2>() = p_.dt * inertia(x[1]).inverse();
  return forward.transpose();
}

Tensor3 TwoLinkArmDynamics::hess_xx(const Eigen::Ref<const Vector>& x,
                                    const Eigen::Ref<const Vector>& u) const {
  return finite_diff_hess_xx(*this, x, u);
}

Tensor3 TwoLinkArmDynamics::hess_uu(const Eigen::Ref<const Vector>& x,
                                    const Eigen::Ref<const Vector>& u) const {
  return finite_diff_hess_uu(*this, x, u);
}

Tensor3 TwoLinkArmDynamics::hess_ux(const Eigen::Ref<const Vector>& x,
                                    const Eigen::Ref<const Vector>& u) const {
  return finite_diff_hess_ux(*this, x, u);
}

ControlProblem two_link_arm_problem(const TwoLinkArmParams& params) {
  const int tau = steps_for(params.total_time, params.dt);
  const auto dynamics = std::make_shared<TwoLinkArmDynamics>(params);

  Matrix terminal_weight = Matrix::Zero(4, 4);
  terminal_weight(0, 0) = 2.0;
  terminal_weight(1, 1) = 2.0;
  terminal_weight(2, 2) = 2.0 * params.velocity_weight;
  terminal_weight(3, 3) = 2.0 * params.velocity_weight;
  Vector terminal_target = Vector::Zero(4);
  terminal_target.head<2>() = params.target;

  Matrix control_weight = 2.0 * params.control_weight * params.dt * Matrix::Identity(2, 2);

  return ControlProblem::time_invariant(
      Vector::Zero(4), dynamics, tau, std::make_shared<ZeroCost>(4),
      std::make_shared<QuadraticCost>(terminal_weight, terminal_target),
      std::make_shared<QuadraticCost>(control_weight, Vector::Zero(2)));
}

// ---------------------------------------------------------------------------
// Random LQ fixture
// ---------------------------------------------------------------------------

ControlProblem random_lq_problem(int horizon, int state_dim, int control_dim,
                                 unsigned seed, double spectral_cap) {
  if (horizon < 1 || state_dim < 1 || control_dim < 1) {
    throw std::invalid_argument("random_lq_problem dimensions must be positive");
  }
  if (!(spectral_cap > 0.0 && spectral_cap < 1.2)) {
    throw std::invalid_argument("spectral_cap must lie in (0, 1.2)");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto random_matrix = [&](int rows, int cols) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) m(i, j) = gauss(rng);
    }
    return m;
  };
  const auto random_vector = [&](int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = gauss(rng);
    return v;
  };

  std::vector<DynamicsPtr> dynamics;
  std::vector<CostPtr> state_costs;
  std::vector<CostPtr> penalties;
  dynamics.reserve(horizon);
  state_costs.reserve(horizon);
  penalties.reserve(horizon);

  for (int t = 0; t < horizon; ++t) {
    Matrix a = random_matrix(state_dim, state_dim);
    const double top = Eigen::JacobiSVD<Matrix>(a).singularValues()(0);
    if (top > spectral_cap) a *= spectral_cap / top;
    Matrix b = random_matrix(state_dim, control_dim) / std::sqrt(double(state_dim));
    dynamics.push_back(std::make_shared<LinearDynamics>(std::move(a), std::move(b)));

    const Matrix state_factor = random_matrix(state_dim, state_dim);
    Matrix state_weight = state_factor.transpose() * state_factor / state_dim;
    state_costs.push_back(std::make_shared<QuadraticCost>(std::move(state_weight),
                                                          random_vector(state_dim)));

    const Matrix control_factor = random_matrix(control_dim, control_dim);
    Matrix control_weight = control_factor.transpose() * control_factor / control_dim +
                            0.1 * Matrix::Identity(control_dim, control_dim);
    penalties.push_back(std::make_shared<QuadraticCost>(std::move(control_weight),
                                                        Vector::Zero(control_dim)));
  }

  return ControlProblem(random_vector(state_dim), std::move(dynamics),
                        std::move(state_costs), std::move(penalties));
}

}  // namespace trajopt
