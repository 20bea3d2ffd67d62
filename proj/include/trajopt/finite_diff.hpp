#pragma once

#include <functional>

#include "trajopt/problem.hpp"

namespace trajopt {

/// Scale-aware central-difference step: 1e-6 * (1 + ||point||_inf).
double finite_diff_step(const Eigen::Ref<const Vector>& point);

/// Central-difference gradient of a scalar function.
Vector finite_diff_gradient(const std::function<double(const Vector&)>& f,
                            const Vector& point);

/// Central-difference Jacobians of a dynamics step, gradient convention
/// (same layout as DynamicsMap::jac_x / jac_u).
Matrix finite_diff_jac_x(const DynamicsMap& map, const Eigen::Ref<const Vector>& x,
                         const Eigen::Ref<const Vector>& u);
Matrix finite_diff_jac_u(const DynamicsMap& map, const Eigen::Ref<const Vector>& x,
                         const Eigen::Ref<const Vector>& u);

/// Second-derivative tensors by central differences of the map's (analytic)
/// first derivatives; xx and uu slices are symmetrized.
Tensor3 finite_diff_hess_xx(const DynamicsMap& map, const Eigen::Ref<const Vector>& x,
                            const Eigen::Ref<const Vector>& u);
Tensor3 finite_diff_hess_uu(const DynamicsMap& map, const Eigen::Ref<const Vector>& x,
                            const Eigen::Ref<const Vector>& u);
Tensor3 finite_diff_hess_ux(const DynamicsMap& map, const Eigen::Ref<const Vector>& x,
                            const Eigen::Ref<const Vector>& u);

/// Central-difference gradient of the objective with respect to the command.
Command finite_diff_objective_gradient(const ControlProblem& problem,
                                       const Command& command);

}  // namespace trajopt
