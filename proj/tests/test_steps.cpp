#include <doctest.h>

#include "oracles.hpp"
#include "test_helpers.hpp"
#include "trajopt/envs.hpp"
#include "trajopt/steps.hpp"

using namespace trajopt;
using namespace trajopt::testing;

namespace {

PendulumParams short_pendulum_params() {
  PendulumParams params;
  params.total_time = 2.5;  // tau = 50 keeps the dense oracles quick
  return params;
}

}  // namespace

TEST_CASE("plain step solves a linear-quadratic problem in one shot") {
  const auto problem = random_lq_problem(8, 3, 2, 61);
  const Command u0 = random_command(8, 2, 62);
  const Command direction = ilqr_step(problem, u0, kInfiniteStep);
  const Command next = u0 + direction;

  const auto dense = oracles::dense_composite(problem);
  CHECK((next.flat() - dense.minimizer()).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(objective(problem, next) == doctest::Approx(dense.minimum()).epsilon(1e-10));
}

TEST_CASE("regularized step equals the dense closed form") {
  SUBCASE("linear-quadratic instance") {
    const auto problem = random_lq_problem(8, 3, 2, 63);
    const Command u = random_command(8, 2, 64);
    const ForwardTape tape = record(problem, u);
    for (const double gamma : {0.1, 1.0, 10.0}) {
      const Command direction = ilqr_step_detail(problem, tape, gamma).direction;
      const Command dense = oracles::dense_gauss_newton_direction(problem, tape, gamma);
      CHECK((direction.flat() - dense.flat()).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
  SUBCASE("pendulum (nonlinear trajectory, quadratic costs)") {
    const auto problem = pendulum_problem(short_pendulum_params());
    const Command u = random_command(problem.horizon(), 1, 65);
    const ForwardTape tape = record(problem, u);
    for (const double gamma : {0.1, 1.0, 10.0}) {
      const Command direction = ilqr_step_detail(problem, tape, gamma).direction;
      const Command dense = oracles::dense_gauss_newton_direction(problem, tape, gamma);
      CHECK((direction.flat() - dense.flat()).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("tiny step sizes degenerate to the gradient step") {
  const auto problem = pendulum_problem(short_pendulum_params());
  const Command u = random_command(problem.horizon(), 1, 66);
  const ForwardTape tape = record(problem, u);
  const double gamma = 1e-8;
  const Command direction = ilqr_step_detail(problem, tape, gamma).direction;
  const Command gradient = objective_gradient(problem, tape);
  CHECK((direction.flat() + gamma * gradient.flat()).cwiseAbs().maxCoeff() <=
        1e-6 * gamma * gradient.flat().cwiseAbs().maxCoeff());
}

TEST_CASE("regularized directions are descent directions") {
  const auto problem = pendulum_problem(short_pendulum_params());
  for (unsigned seed = 0; seed < 4; ++seed) {
    const Command u = random_command(problem.horizon(), 1, 70 + seed);
    const ForwardTape tape = record(problem, u);
    const Command gradient = objective_gradient(problem, tape);
    for (const double gamma : {0.5, 5.0}) {
      const Command direction = ilqr_step_detail(problem, tape, gamma).direction;
      CHECK(direction.dot(gradient) < 0.0);
    }
  }
}

TEST_CASE("gaussian step reduces to the plain step bit for bit") {
  SUBCASE("deterministic problem") {
    const auto problem = random_lq_problem(6, 3, 2, 80);
    const Command u = random_command(6, 2, 81);
    const Command plain = ilqr_step(problem, u, 2.0);
    const Command gaussian = ilqg_step(problem, u, 2.0);
    CHECK(plain.flat() == gaussian.flat());
  }
  SUBCASE("noisy problem with zero noise maps") {
    std::mt19937_64 rng(82);
    const int d = 2, p = 2, tau = 5;
    const auto dynamics = std::make_shared<LinearDynamics>(
        random_matrix(d, d, rng) * 0.5, random_matrix(d, p, rng), Matrix::Zero(d, 2));
    const auto problem = ControlProblem::time_invariant(
        random_vector(d, rng), dynamics, tau,
        std::make_shared<QuadraticCost>(Matrix::Identity(d, d), random_vector(d, rng)),
        std::make_shared<QuadraticCost>(Matrix::Identity(d, d), random_vector(d, rng)),
        std::make_shared<QuadraticCost>(Matrix::Identity(p, p), Vector::Zero(p)));
    const Command u = random_command(tau, p, 83);
    CHECK(ilqr_step(problem, u, 1.5).flat() == ilqg_step(problem, u, 1.5).flat());
  }
}

TEST_CASE("additive noise does not change the step direction") {
  std::mt19937_64 rng(84);
  const int d = 3, p = 2, tau = 5;
  const Matrix a = random_matrix(d, d, rng) * 0.5;
  const Matrix b = random_matrix(d, p, rng);
  const Matrix gain = random_matrix(d, 2, rng);
  const auto mk = [&](Matrix noise) {
    const auto dynamics =
        std::make_shared<LinearDynamics>(a, b, std::move(noise));
    return ControlProblem::time_invariant(
        Vector::Ones(d), dynamics, tau,
        std::make_shared<QuadraticCost>(Matrix::Identity(d, d), Vector::Zero(d)),
        std::make_shared<QuadraticCost>(Matrix::Identity(d, d), Vector::Ones(d)),
        std::make_shared<QuadraticCost>(Matrix::Identity(p, p), Vector::Zero(p)));
  };
  const auto deterministic = mk(Matrix::Zero(d, 0));
  const auto noisy = mk(gain);
  const Command u = random_command(tau, p, 85);
  const Command plain = ilqr_step(deterministic, u, 2.0);
  const Command gaussian = ilqg_step(noisy, u, 2.0);
  CHECK((plain.flat() - gaussian.flat()).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("rollout step is a fixed point at the optimum of an LQ problem") {
  const auto problem = random_lq_problem(6, 2, 2, 90);
  const auto dense = oracles::dense_composite(problem);
  const Command optimum(6, 2, dense.minimizer());
  const Command next = tassa_ilqg_step(problem, optimum);
  CHECK((next.flat() - optimum.flat()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("rollout step with full alpha equals the plain update on LQ problems") {
  const auto problem = random_lq_problem(7, 3, 2, 91);
  const Command u = random_command(7, 2, 92);
  StepReport report;
  const Command via_rollout = tassa_ilqg_step(problem, u, {}, nullptr, &report);
  const Command via_direction = u + ilqr_step(problem, u, kInfiniteStep);
  CHECK(report.accepted_step == doctest::Approx(1.0));
  CHECK((via_rollout.flat() - via_direction.flat()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("rollout step decreases the pendulum objective") {
  const auto problem = pendulum_problem();
  const Command u0(problem.horizon(), 1);
  const double f0 = objective(problem, u0);
  const Command next = tassa_ilqg_step(problem, u0);
  CHECK(objective(problem, next) < f0);
}

TEST_CASE("second-order step reaches the optimum of an LQ problem in one go") {
  const auto problem = random_lq_problem(6, 3, 2, 93);
  const Command u0 = random_command(6, 2, 94);
  StepReport report;
  const Command next = ddp_step(problem, u0, {}, nullptr, &report);
  const auto dense = oracles::dense_composite(problem);
  CHECK(report.accepted_step == doctest::Approx(1.0));
  CHECK((next.flat() - dense.minimizer()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("zeroing the curvature tensors turns the second-order step into the rollout step") {
  const auto problem = pendulum_problem(short_pendulum_params());
  const auto zeroed = wrap_dynamics(problem, [](DynamicsPtr inner) {
    return std::make_shared<ZeroedHessians>(std::move(inner));
  });
  const Command u = random_command(problem.horizon(), 1, 95, 0.3);
  const Command ddp_zeroed = ddp_step(zeroed, u);
  const Command tassa = tassa_ilqg_step(problem, u);
  CHECK((ddp_zeroed.flat() - tassa.flat()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("second-order step decreases the pendulum objective") {
  const auto problem = pendulum_problem();
  const Command u0(problem.horizon(), 1);
  const double f0 = objective(problem, u0);
  const Command next = ddp_step(problem, u0);
  CHECK(objective(problem, next) < f0);
}

TEST_CASE("dual step returns zero at a stationary point") {
  // Terminal target reachable exactly with zero control from the start state.
  PendulumParams params;
  params.total_time = 0.5;
  auto problem = pendulum_problem(params);
  // Build a problem whose terminal target is the zero trajectory's endpoint.
  Matrix weight = Matrix::Identity(2, 2);
  auto tweaked = ControlProblem::time_invariant(
      problem.initial_state(), problem.dynamics_ptr(0), problem.horizon(),
      std::make_shared<ZeroCost>(2),
      std::make_shared<QuadraticCost>(weight, Vector::Zero(2)),
      std::make_shared<QuadraticCost>(Matrix::Identity(1, 1), Vector::Zero(1)));
  OracleCounter counter;
  StepReport report;
  const Command direction = gn_step_dual(tweaked, Command(tweaked.horizon(), 1), 1.0,
                                         &counter, &report);
  CHECK(direction.flat().cwiseAbs().maxCoeff() == 0.0);
  CHECK(report.inner_iterations == 0);
}

TEST_CASE("dual step on a scalar problem needs at most three oracle calls") {
  // d = 1: x' = 0.9 x + u with terminal quadratic cost.
  const auto dynamics = std::make_shared<LinearDynamics>(
      Matrix::Constant(1, 1, 0.9), Matrix::Identity(1, 1));
  const auto problem = ControlProblem::time_invariant(
      Vector::Ones(1), dynamics, 6, std::make_shared<ZeroCost>(1),
      std::make_shared<QuadraticCost>(Matrix::Identity(1, 1), Vector::Constant(1, 2.0)),
      std::make_shared<QuadraticCost>(Matrix::Constant(1, 1, 0.5), Vector::Zero(1)));
  const Command u = random_command(6, 1, 96);
  OracleCounter counter;
  StepReport report;
  const Command dual = gn_step_dual(problem, u, 2.0, &counter, &report);
  CHECK(report.inner_iterations <= 1);
  CHECK(counter.adjoint_calls + counter.tangent_calls <= 3);

  const Command primal = ilqr_step(problem, u, 2.0);
  CHECK((dual.flat() - primal.flat()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("dual step matches the primal step on the pendulum within five calls") {
  const auto problem = pendulum_problem();
  for (unsigned seed = 0; seed < 3; ++seed) {
    const Command u = random_command(problem.horizon(), 1, 97 + seed);
    OracleCounter counter;
    const Command dual = gn_step_dual(problem, u, 1.0, &counter);
    CHECK(counter.adjoint_calls + counter.tangent_calls <= 5);
    const Command primal = ilqr_step(problem, u, 1.0);
    CHECK((dual.flat() - primal.flat()).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("dual step rejects problems with intermediate state costs") {
  const auto problem = random_lq_problem(5, 2, 1, 98);  // tracking costs everywhere
  CHECK_THROWS_AS(gn_step_dual(problem, Command(5, 1), 1.0),
                  UnsupportedStructureError);
}

TEST_CASE("fast-gradient subproblem solver agrees with the step") {
  const auto problem = pendulum_problem([] {
    PendulumParams params;
    params.total_time = 0.25;  // tau = 5
    return params;
  }());
  const Command u = random_command(problem.horizon(), 1, 99);
  const ForwardTape tape = record(problem, u);
  const double gamma = 1.0;
  const Command step = ilqr_step_detail(problem, tape, gamma).direction;
  const Command fista = oracles::fast_gradient_gn_direction(problem, tape, gamma);
  CHECK((step.flat() - fista.flat()).cwiseAbs().maxCoeff() < 1e-6);
}
