#include "trajopt/lqr.hpp"

#include <Eigen/Cholesky>

namespace trajopt {

void LqSubproblem::validate() const {
  const size_t tau = static_cast<size_t>(horizon);
  if (tau == 0) throw std::invalid_argument("LQ subproblem horizon must be positive");
  if (jac_x.size() != tau || jac_u.size() != tau || state_grad.size() != tau ||
      state_hess.size() != tau || control_grad.size() != tau ||
      control_hess.size() != tau) {
    throw std::invalid_argument("LQ subproblem has inconsistent sequence lengths");
  }
  for (size_t t = 0; t < tau; ++t) {
    if (jac_x[t].rows() != state_dim || jac_x[t].cols() != state_dim ||
        jac_u[t].rows() != control_dim || jac_u[t].cols() != state_dim ||
        state_grad[t].size() != state_dim || state_hess[t].rows() != state_dim ||
        control_grad[t].size() != control_dim ||
        control_hess[t].rows() != control_dim) {
      throw std::invalid_argument("LQ subproblem has inconsistent dimensions");
    }
  }
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  if (!jac_w.empty() && (jac_w.size() != tau || hess_uw.size() != tau)) {
    throw std::invalid_argument("LQ subproblem noise data has wrong length");
  }
}

namespace {

struct BackwardWork {
  LqSolution solution;
};

// Shared Riccati loop.  `noisy` enables the Gaussian corrections to the
// control-block gradient and Hessian.
LqSolution riccati_backward(const LqSubproblem& sub, bool noisy) {
  sub.validate();
  const int tau = sub.horizon;
  const int d = sub.state_dim;
  const int p = sub.control_dim;
  const double inv_gamma = inverse_step(sub.gamma);

  LqSolution out;
  out.policy.gains.assign(tau, Matrix());
  out.policy.offsets.assign(tau, Vector());
  out.cost_to_go.hessians.assign(tau + 1, Matrix());
  out.cost_to_go.gradients.assign(tau + 1, Vector());

  out.cost_to_go.hessians[tau] = sub.state_hess[tau - 1];
  out.cost_to_go.gradients[tau] = sub.state_grad[tau - 1];

  for (int t = tau - 1; t >= 0; --t) {
    const Matrix& value_hess = out.cost_to_go.hessians[t + 1];   // C_{t+1,xx}
    const Vector& value_grad = out.cost_to_go.gradients[t + 1];  // c_{t+1,x}

    Vector q_u = sub.control_grad[t] + sub.jac_u[t] * value_grad;
    Matrix q_uu = sub.control_hess[t] +
                  sub.jac_u[t] * value_hess * sub.jac_u[t].transpose();
    if (inv_gamma > 0.0) q_uu.diagonal().array() += inv_gamma;
    const Matrix q_ux = sub.jac_u[t] * value_hess * sub.jac_x[t].transpose();

    if (noisy && sub.has_noise()) {
      const Matrix noise_cols = sub.jac_w[t].transpose();  // d x q, columns psi_i
      const int q_dim = static_cast<int>(noise_cols.cols());
      for (int i = 0; i < q_dim; ++i) {
        // cross_i(k, j) = d2 phi_k / (du_j dw_i), shape d x p.
        Matrix cross_i(d, p);
        for (int k = 0; k < d; ++k) {
          cross_i.row(k) = sub.hess_uw[t][static_cast<size_t>(k)].col(i).transpose();
        }
        q_u.noalias() += cross_i.transpose() * value_hess * noise_cols.col(i);
        q_uu.noalias() += cross_i.transpose() * value_hess * cross_i;
      }
    }

    Eigen::LLT<Matrix> chol(q_uu);
    if (chol.info() != Eigen::Success) {
      throw IllConditionedSubproblemError(t);
    }

    const Matrix gain = -chol.solve(q_ux);      // K_t
    const Vector offset = -chol.solve(q_u);     // k_t

    // State-block terms; there is no state cost at t = 0.
    Vector q_x = sub.jac_x[t] * value_grad;
    Matrix q_xx = sub.jac_x[t] * value_hess * sub.jac_x[t].transpose();
    if (t >= 1) {
      q_x += sub.state_grad[t - 1];
      q_xx += sub.state_hess[t - 1];
    }

    Matrix next_hess = q_xx + q_ux.transpose() * gain;
    next_hess = 0.5 * (next_hess + next_hess.transpose().eval());
    out.cost_to_go.hessians[t] = std::move(next_hess);
    out.cost_to_go.gradients[t] = q_x + q_ux.transpose() * offset;
    out.policy.gains[t] = gain;
    out.policy.offsets[t] = offset;
  }
  return out;
}

}  // namespace

LqSolution lq_backward(const LqSubproblem& sub) { return riccati_backward(sub, false); }

LqSolution lqg_backward(const LqSubproblem& sub) { return riccati_backward(sub, true); }

LqRolloutResult lq_rollout(const LqSubproblem& sub, const FeedbackPolicy& policy) {
  const int tau = sub.horizon;
  if (static_cast<int>(policy.gains.size()) != tau) {
    throw std::invalid_argument("policy length does not match the subproblem");
  }
  LqRolloutResult out{Command(tau, sub.control_dim), StateSequence(tau, sub.state_dim)};
  Vector y = Vector::Zero(sub.state_dim);
  for (int t = 0; t < tau; ++t) {
    const Vector v = policy.gains[t] * y + policy.offsets[t];
    out.controls[t] = v;
    y = sub.jac_x[t].transpose() * y + sub.jac_u[t].transpose() * v;
    out.states[t] = y;
  }
  return out;
}

}  // namespace trajopt
