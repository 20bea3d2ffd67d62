#include <doctest.h>

#include <Eigen/SVD>
#include <sstream>

#include "oracles.hpp"
#include "test_helpers.hpp"
#include "trajopt/envs.hpp"
#include "trajopt/solvers.hpp"

using namespace trajopt;
using namespace trajopt::testing;

namespace {

bool monotone_nonincreasing(const ConvergenceRecord& rec) {
  for (size_t i = 1; i < rec.rows.size(); ++i) {
    if (rec.rows[i].f > rec.rows[i - 1].f) return false;
  }
  return true;
}

ControlProblem scalar_quadratic_chain() {
  // f(u) = 1/2 u^2 through x_1 = x_0 + u with x_0 = 0.
  return identity_chain(
      1, 1, std::make_shared<ZeroCost>(1),
      std::make_shared<QuadraticCost>(Matrix::Identity(1, 1), Vector::Zero(1)),
      std::make_shared<ZeroCost>(1));
}

}  // namespace

TEST_CASE("gradient descent solves the scalar quadratic in one step") {
  const auto problem = scalar_quadratic_chain();
  Command u0(1, 1);
  u0.flat() << 3.0;
  SolverConfig config;
  config.gamma0 = 1.0;
  const SolveResult result = gradient_descent(problem, u0, config);
  CHECK(result.record.reached_tolerance);
  CHECK(result.record.rows.size() == 2);
  CHECK(result.command.flat().cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gradient descent returns immediately from a stationary point") {
  const auto problem = scalar_quadratic_chain();
  const SolveResult result = gradient_descent(problem, Command(1, 1), SolverConfig{});
  CHECK(result.record.reached_tolerance);
  CHECK(result.record.rows.size() == 1);
}

TEST_CASE("gradient descent makes monotone progress on the pendulum") {
  const auto problem = pendulum_problem();
  SolverConfig config;
  config.max_iterations = 30;
  config.tolerance = 1e-12;
  const SolveResult result = gradient_descent(problem, Command(100, 1), config);
  CHECK(monotone_nonincreasing(result.record));
  CHECK(result.record.rows.back().grad_norm < result.record.rows.front().grad_norm);
}

TEST_CASE("line search accepts the starting step when the model is exact") {
  const auto problem = random_lq_problem(6, 3, 2, 201);
  const Command u = random_command(6, 2, 202);
  const LineSearchResult ls = sufficient_decrease_linesearch(problem, u, 7.0, 0.5);
  CHECK(ls.gamma == doctest::Approx(7.0));
  CHECK(ls.trials == 1);
}

TEST_CASE("line search is trivial at a stationary point") {
  const auto problem = scalar_quadratic_chain();
  const LineSearchResult ls = sufficient_decrease_linesearch(problem, Command(1, 1),
                                                             2.0, 0.5);
  CHECK(ls.gamma == doctest::Approx(2.0));
  CHECK(ls.next.flat().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("accepted pendulum step satisfies the decrease condition it claims") {
  const auto problem = pendulum_problem();
  const LineSearchResult ls =
      sufficient_decrease_linesearch(problem, Command(100, 1), 10.0, 0.5);
  CHECK(ls.f_next <= ls.model_value + 0.5 / ls.gamma * ls.step_norm_sq);
  CHECK(ls.f_next < objective(problem, Command(100, 1)));
}

TEST_CASE("regularized solver nails linear-quadratic problems within three iterations") {
  const auto problem = random_lq_problem(8, 3, 2, 203);
  SolverConfig config;
  config.gamma0 = 1e8;
  config.tolerance = 1e-10;
  const SolveResult result =
      regularized_ilqr(problem, random_command(8, 2, 204), config);
  CHECK(result.record.reached_tolerance);
  CHECK(result.record.rows.back().k <= 3);
}

TEST_CASE("regularized solver does nothing at a stationary start") {
  const auto problem = scalar_quadratic_chain();
  const SolveResult result = regularized_ilqr(problem, Command(1, 1), SolverConfig{});
  CHECK(result.record.rows.size() == 1);
  CHECK(result.record.reached_tolerance);
}

TEST_CASE("regularized solver swings up the pendulum with certified decreases") {
  const auto problem = pendulum_problem();
  SolverConfig config;
  config.tolerance = 1e-3;
  config.gamma0 = 100.0;

  struct Step {
    double f_prev, f_next, gamma, step_sq;
  };
  std::vector<Step> steps;
  const IterationObserver observer = [&](int, const Command& current,
                                         const Command& next, double gamma) {
    steps.push_back(Step{objective(problem, current), objective(problem, next), gamma,
                         (next - current).flat().squaredNorm()});
  };

  const SolveResult result =
      regularized_ilqr(problem, Command(100, 1), config, observer);
  CHECK(result.record.reached_tolerance);
  CHECK(monotone_nonincreasing(result.record));
  CHECK(result.record.rows.back().grad_norm <= 1e-3);
  for (const auto& step : steps) {
    CHECK(step.f_next <= step.f_prev - 0.5 / step.gamma * step.step_sq);
  }
}

TEST_CASE("a-posteriori rate certificate holds on a linear-quadratic instance") {
  const auto problem = random_lq_problem(8, 3, 2, 205);
  SolverConfig config;
  config.max_iterations = 10;
  config.tolerance = 1e-14;
  const Command u0 = random_command(8, 2, 206);
  const SolveResult result = regularized_ilqr(problem, u0, config);
  const auto& rows = result.record.rows;

  const ForwardTape tape = record(problem, u0);
  const double traj_lipschitz =
      Eigen::JacobiSVD<Matrix>(oracles::dense_trajectory_jacobian(tape))
          .singularValues()(0);
  double state_smoothness = 0.0;
  double control_smoothness = 0.0;
  for (int t = 1; t <= problem.horizon(); ++t) {
    state_smoothness =
        std::max(state_smoothness,
                 Eigen::JacobiSVD<Matrix>(problem.state_cost(t).hessian(Vector::Zero(3)))
                     .singularValues()(0));
  }
  for (int t = 0; t < problem.horizon(); ++t) {
    control_smoothness = std::max(
        control_smoothness,
        Eigen::JacobiSVD<Matrix>(problem.control_penalty(t).hessian(Vector::Zero(2)))
            .singularValues()(0));
  }

  double l_emp = 0.0;
  double min_grad_sq = std::numeric_limits<double>::infinity();
  for (const auto& row : rows) {
    min_grad_sq = std::min(min_grad_sq, row.grad_norm * row.grad_norm);
    if (row.gamma) {
      const double mix = traj_lipschitz * traj_lipschitz * state_smoothness +
                         control_smoothness + 1.0 / *row.gamma;
      l_emp = std::max(l_emp, *row.gamma * mix * mix);
    }
  }
  const double n_steps = static_cast<double>(rows.size() - 1);
  const double bound =
      2.0 * l_emp * (rows.front().f - rows.back().f) / (n_steps + 1.0);
  CHECK(min_grad_sq <= bound + 1e-12);
}

TEST_CASE("extrapolation weights follow the golden-ratio recursion") {
  CHECK(next_extrapolation_weight(1.0) ==
        doctest::Approx((std::sqrt(5.0) - 1.0) / 2.0).epsilon(1e-12));
  double alpha = 1.0;
  for (int k = 0; k < 20; ++k) {
    const double next = next_extrapolation_weight(alpha);
    CHECK(next > 0.0);
    CHECK(next < 1.0);
    CHECK(std::abs((1.0 - next) / (next * next) - 1.0 / (alpha * alpha)) < 1e-12);
    alpha = next;
  }
}

TEST_CASE("accelerated solver meets the convex rate bound on LQ instances") {
  const auto problem = random_lq_problem(6, 2, 2, 207);
  const auto dense = oracles::dense_composite(problem);
  const double f_star = dense.minimum();
  const Command u0 = random_command(6, 2, 208);
  const Vector gap0 = dense.minimizer() - u0.flat();

  SolverConfig config;
  config.max_iterations = 40;
  config.tolerance = 1e-9;
  const SolveResult result = accelerated_reg_gn(problem, u0, config);

  double min_delta = config.gamma0;
  for (const auto& row : result.record.rows) {
    if (row.delta) min_delta = std::min(min_delta, *row.delta);
    if (row.k == 0) continue;
    const double n = static_cast<double>(row.k);
    const double bound = 4.0 / min_delta * gap0.squaredNorm() / ((n + 1.0) * (n + 1.0));
    CHECK(row.f - f_star <= bound + 1e-12);
  }
}

TEST_CASE("accelerated solver never loses to its regularized branch on the pendulum") {
  const auto problem = pendulum_problem();
  SolverConfig config;
  config.max_iterations = 25;
  config.tolerance = 1e-12;
  const SolveResult result = accelerated_reg_gn(problem, Command(100, 1), config);
  CHECK(monotone_nonincreasing(result.record));
  for (const auto& row : result.record.rows) {
    if (row.k > 0) CHECK(row.delta.has_value());
  }
}

TEST_CASE("plain solver finishes linear-quadratic problems in one iteration") {
  const auto problem = random_lq_problem(7, 3, 2, 209);
  SolverConfig config;
  config.tolerance = 1e-8;
  const SolveResult result = ilqr_solver(problem, random_command(7, 2, 210), config);
  CHECK(result.record.reached_tolerance);
  CHECK(result.record.rows.back().k == 1);
  const auto dense = oracles::dense_composite(problem);
  CHECK((result.command.flat() - dense.minimizer()).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("plain solver stays put at a stationary start") {
  const auto problem = scalar_quadratic_chain();
  const SolveResult result = ilqr_solver(problem, Command(1, 1), SolverConfig{});
  CHECK(result.record.rows.size() == 1);
}

TEST_CASE("gaussian solver reproduces the plain trace on deterministic problems") {
  const auto problem = random_lq_problem(6, 2, 2, 211);
  const Command u0 = random_command(6, 2, 212);
  SolverConfig config;
  config.max_iterations = 5;
  config.tolerance = 1e-10;
  const SolveResult plain = ilqr_solver(problem, u0, config);
  const SolveResult gaussian = ilqg_solver(problem, u0, config);
  CHECK(plain.command.flat() == gaussian.command.flat());
  REQUIRE(plain.record.rows.size() == gaussian.record.rows.size());
  for (size_t i = 0; i < plain.record.rows.size(); ++i) {
    CHECK(plain.record.rows[i].f == gaussian.record.rows[i].f);
    CHECK(plain.record.rows[i].grad_norm == gaussian.record.rows[i].grad_norm);
  }
}

TEST_CASE("second-order solver converges on LQ problems in one iteration") {
  const auto problem = random_lq_problem(6, 3, 2, 213);
  SolverConfig config;
  config.tolerance = 1e-7;
  const SolveResult result = ddp_solver(problem, random_command(6, 2, 214), config);
  CHECK(result.record.reached_tolerance);
  CHECK(result.record.rows.back().k == 1);
}

TEST_CASE("every rollout-style solver makes monotone progress on the pendulum") {
  const auto problem = pendulum_problem();
  SolverConfig config;
  config.max_iterations = 12;
  config.tolerance = 1e-12;
  const Command u0(100, 1);
  const double f0 = objective(problem, u0);

  for (const auto& solve : {ddp_solver, tassa_ilqg_solver, ilqg_solver}) {
    const SolveResult result = solve(problem, u0, config);
    CHECK(monotone_nonincreasing(result.record));
    CHECK(result.record.rows.back().f < f0);
  }
  const SolveResult reg = regularized_ilqg(problem, u0, config, {});
  CHECK(monotone_nonincreasing(reg.record));
  CHECK(reg.record.rows.back().f < f0);
}

TEST_CASE("burn-in freezes the accepted step size") {
  const auto problem = pendulum_problem();
  SolverConfig config;
  config.max_iterations = 12;
  config.tolerance = 1e-12;
  config.burn_in = 5;
  const SolveResult result = regularized_ilqr(problem, Command(100, 1), config);
  REQUIRE(result.record.rows.size() > 8);
  const double frozen = *result.record.rows[8].gamma;
  for (size_t i = 9; i < result.record.rows.size(); ++i) {
    CHECK(*result.record.rows[i].gamma <= frozen + 1e-15);
  }
  CHECK(monotone_nonincreasing(result.record));
}

TEST_CASE("objective-decrease acceptance also drives the pendulum down") {
  const auto problem = pendulum_problem();
  SolverConfig config;
  config.max_iterations = 15;
  config.tolerance = 1e-12;
  config.objective_decrease_condition = true;
  const SolveResult result = regularized_ilqr(problem, Command(100, 1), config);
  CHECK(monotone_nonincreasing(result.record));
  CHECK(result.record.rows.back().f < result.record.rows.front().f);
}

TEST_CASE("the acceleration toggle routes through the extrapolated scheme") {
  const auto problem = pendulum_problem();
  SolverConfig config;
  config.max_iterations = 5;
  config.tolerance = 1e-12;
  config.accelerate = true;
  const SolveResult result = regularized_ilqr(problem, Command(100, 1), config);
  for (const auto& row : result.record.rows) {
    if (row.k > 0) CHECK(row.delta.has_value());
  }
  CHECK_THROWS_AS(regularized_ilqr(problem, Command(100, 1), config,
                                   [](int, const Command&, const Command&, double) {}),
                  std::invalid_argument);
}

TEST_CASE("solver configuration is validated") {
  const auto problem = scalar_quadratic_chain();
  SolverConfig config;
  config.shrink = 1.5;
  CHECK_THROWS_AS(regularized_ilqr(problem, Command(1, 1), config),
                  std::invalid_argument);
  config = SolverConfig{};
  config.tolerance = -1.0;
  CHECK_THROWS_AS(gradient_descent(problem, Command(1, 1), config),
                  std::invalid_argument);
}

TEST_CASE("convergence records serialize to the stable CSV schema") {
  ConvergenceRecord rec;
  rec.append(IterationRow{0, 2.5, 1.0, std::nullopt, std::nullopt, 2, 0.001});
  rec.append(IterationRow{1, 1.25, 0.5, 0.75, std::nullopt, 4, 0.002});
  std::ostringstream os;
  rec.write_csv(os);
  const std::string text = os.str();
  CHECK(text.rfind("k,f,grad_norm,gamma,delta,oracle_calls,wall_s\n", 0) == 0);
  CHECK(text.find("1,1.25,0.5,0.75,,4,") != std::string::npos);
  CHECK_THROWS_AS(rec.append(IterationRow{1, 1.0, 0.1, 0.5, std::nullopt, 5, 0.003}),
                  std::logic_error);
}
