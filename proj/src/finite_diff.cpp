#include "trajopt/finite_diff.hpp"

namespace trajopt {

double finite_diff_step(const Eigen::Ref<const Vector>& point) {
  const double scale = point.size() == 0 ? 0.0 : point.cwiseAbs().maxCoeff();
  return 1e-6 * (1.0 + scale);
}

Vector finite_diff_gradient(const std::function<double(const Vector&)>& f,
                            const Vector& point) {
  const double h = finite_diff_step(point);
  Vector grad(point.size());
  Vector probe = point;
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    probe[i] = point[i] + h;
    const double up = f(probe);
    probe[i] = point[i] - h;
    const double down = f(probe);
    probe[i] = point[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

namespace {

// Differentiates `eval` coordinate-by-coordinate; rows index the perturbed
// variable, columns the output (gradient convention).
Matrix jacobian_by_rows(const std::function<Vector(const Vector&)>& eval,
                        const Vector& point, int out_dim) {
  const double h = finite_diff_step(point);
  Matrix jac(point.size(), out_dim);
  Vector probe = point;
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    probe[i] = point[i] + h;
    const Vector up = eval(probe);
    probe[i] = point[i] - h;
    const Vector down = eval(probe);
    probe[i] = point[i];
    jac.row(i) = ((up - down) / (2.0 * h)).transpose();
  }
  return jac;
}

}  // namespace

Matrix finite_diff_jac_x(const DynamicsMap& map, const Eigen::Ref<const Vector>& x,
                         const Eigen::Ref<const Vector>& u) {
  const Vector xc = x;
  const Vector uc = u;
  return jacobian_by_rows([&](const Vector& z) { return map.evaluate(z, uc); }, xc,
                          map.state_dim());
}

Matrix finite_diff_jac_u(const DynamicsMap& map, const Eigen::Ref<const Vector>& x,
                         const Eigen::Ref<const Vector>& u) {
  const Vector xc = x;
  const Vector uc = u;
  return jacobian_by_rows([&](const Vector& z) { return map.evaluate(xc, z); }, uc,
                          map.state_dim());
}

namespace {

// Tensor slices tensor[k](i, j) = d(jac(i, k))/d(var_j), built from central
// differences of a first-derivative matrix.
Tensor3 tensor_from_jacobian(const std::function<Matrix(const Vector&)>& jac,
                             const Vector& point, int rows, int out_dim,
                             bool symmetrize) {
  const double h = finite_diff_step(point);
  Tensor3 tensor(static_cast<size_t>(out_dim), Matrix::Zero(rows, point.size()));
  Vector probe = point;
  for (Eigen::Index j = 0; j < point.size(); ++j) {
    probe[j] = point[j] + h;
    const Matrix up = jac(probe);
    probe[j] = point[j] - h;
    const Matrix down = jac(probe);
    probe[j] = point[j];
    const Matrix diff = (up - down) / (2.0 * h);
    for (int k = 0; k < out_dim; ++k) {
      tensor[static_cast<size_t>(k)].col(j) = diff.col(k);
    }
  }
  if (symmetrize) {
    for (auto& slice : tensor) slice = 0.5 * (slice + slice.transpose().eval());
  }
  return tensor;
}

}  // namespace

Tensor3 finite_diff_hess_xx(const DynamicsMap& map, const Eigen::Ref<const Vector>& x,
                            const Eigen::Ref<const Vector>& u) {
  const Vector xc = x;
  const Vector uc = u;
  return tensor_from_jacobian([&](const Vector& z) { return map.jac_x(z, uc); }, xc,
                              map.state_dim(), map.state_dim(), true);
}

Tensor3 finite_diff_hess_uu(const DynamicsMap& map, const Eigen::Ref<const Vector>& x,
                            const Eigen::Ref<const Vector>& u) {
  const Vector xc = x;
  const Vector uc = u;
  return tensor_from_jacobian([&](const Vector& z) { return map.jac_u(xc, z); }, uc,
                              map.control_dim(), map.state_dim(), true);
}

Tensor3 finite_diff_hess_ux(const DynamicsMap& map, const Eigen::Ref<const Vector>& x,
                            const Eigen::Ref<const Vector>& u) {
  const Vector xc = x;
  const Vector uc = u;
  // Perturb x, differentiate jac_u: slice k has entry (i, j) = d2 phi_k / du_i dx_j.
  return tensor_from_jacobian([&](const Vector& z) { return map.jac_u(z, uc); }, xc,
                              map.control_dim(), map.state_dim(), false);
}

Command finite_diff_objective_gradient(const ControlProblem& problem,
                                       const Command& command) {
  const auto f = [&](const Vector& flat) {
    return objective(problem, Command(command.count(), command.dim(), flat));
  };
  return Command(command.count(), command.dim(),
                 finite_diff_gradient(f, command.flat()));
}

}  // namespace trajopt
