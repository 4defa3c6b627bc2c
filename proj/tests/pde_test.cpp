#include "parakkt/pde.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "manufactured.hpp"
#include "parakkt/error.hpp"

namespace parakkt {
namespace {

constexpr double kPi = std::numbers::pi;

ProblemSpec heat_problem(const Domain& dom, double horizon, double amplitude) {
  ConvexQuadraticParams p;
  p.reaction = 0.0;
  p.initial_amplitude = amplitude;
  return make_convex_quadratic(p, dom, horizon);
}

Field random_field(const Mesh& m, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Field f = Field::zeros(m);
  for (int n = 1; n < m.num_levels(); ++n) {
    for (int k = 0; k < m.num_nodes(); ++k) f(n, k) = dist(rng);
  }
  return f;
}

TEST(StateTest, ZeroDataGivesExactlyZero) {
  CubicExampleParams p;
  p.initial_amplitude = 0.0;
  const ProblemSpec s = make_example_cubic(p, Domain{2, 1.0, 1.0}, 1.0);
  const Mesh m = Mesh::build_2d(1.0, 1.0, 6, 6, 1.0, 5);
  const EllipticOperator op = assemble_elliptic(m, s.diffusion);
  const StateSolution sol = solve_state(s, op, Field::zeros(m));
  EXPECT_EQ(sol.y.values().cwiseAbs().maxCoeff(), 0.0);
  for (int it : sol.diagnostics.newton_iterations) EXPECT_EQ(it, 0);
}

TEST(StateTest, HeatEquationMatchesClosedForm) {
  // f = 0, y0 = sin(pi x): y = exp(-pi^2 t) sin(pi x). Error O(h^2 + dt).
  const ProblemSpec s = heat_problem(Domain{1, 1.0, 1.0}, 0.5, 1.0);
  std::vector<double> err;
  for (int level = 0; level < 3; ++level) {
    const int nx = 16 << level;
    const int nt = 16 << (2 * level);
    const Mesh m = Mesh::build_1d(1.0, nx - 1, 0.5, nt);
    const EllipticOperator op = assemble_elliptic(m, s.diffusion);
    const Field y = solve_state(s, op, Field::zeros(m)).y;
    const Field exact = Field::sample(m, [](const Point& q) {
      return std::exp(-kPi * kPi * q.t) * std::sin(kPi * q.x[0]);
    });
    err.push_back((y.values() - exact.values()).lpNorm<Eigen::Infinity>());
  }
  EXPECT_LT(err[0], 0.1);
  EXPECT_GT(err[0] / err[1], 3.5);
  EXPECT_GT(err[1] / err[2], 3.5);
}

TEST(StateTest, CubicExampleStateIsNonnegative) {
  const ProblemSpec s = make_example_cubic({}, Domain{2, 1.0, 1.0}, 1.0);
  const Mesh m = Mesh::build_2d(1.0, 1.0, 12, 12, 1.0, 16);
  const EllipticOperator op = assemble_elliptic(m, s.diffusion);
  const Field y = solve_state(s, op, Field::constant(m, 0.5)).y;
  EXPECT_GE(y.values().minCoeff(), -1e-12);
}

TEST(StateTest, NewtonStartDoesNotChangeTheSolution) {
  const ProblemSpec s = make_example_cubic({}, Domain{1, 1.0, 1.0}, 1.0);
  const Mesh m = Mesh::build_1d(1.0, 30, 1.0, 20);
  const EllipticOperator op = assemble_elliptic(m, s.diffusion);
  const Field u = random_field(m, 5, -3.0, 3.0);
  PdeOptions a, b;
  b.newton_start = PdeOptions::NewtonStart::zero;
  const Field ya = solve_state(s, op, u, a).y;
  const Field yb = solve_state(s, op, u, b).y;
  EXPECT_LE((ya.values() - yb.values()).lpNorm<Eigen::Infinity>(), 1e-10);
}

TEST(StateTest, DiagnosticsRecordAcceptedResiduals) {
  const ProblemSpec s = make_example_cubic({}, Domain{1, 1.0, 1.0}, 1.0);
  const Mesh m = Mesh::build_1d(1.0, 20, 1.0, 10);
  const EllipticOperator op = assemble_elliptic(m, s.diffusion);
  PdeOptions opt;
  const StateSolution sol = solve_state(s, op, Field::constant(m, 2.0), opt);
  ASSERT_EQ(sol.diagnostics.newton_iterations.size(), 10u);
  for (double r : sol.diagnostics.max_residual) EXPECT_LE(r, opt.newton_tol);
  for (int it : sol.diagnostics.newton_iterations) EXPECT_GE(it, 1);
}

TEST(StateTest, NewtonFailureCarriesStepIndex) {
  const ProblemSpec s = make_example_cubic({}, Domain{1, 1.0, 1.0}, 1.0);
  const Mesh m = Mesh::build_1d(1.0, 10, 1.0, 4);
  const EllipticOperator op = assemble_elliptic(m, s.diffusion);
  PdeOptions opt;
  opt.newton_max_iterations = 1;
  opt.newton_tol = 1e-300;
  try {
    solve_state(s, op, Field::constant(m, 50.0), opt);
    FAIL();
  } catch (const NewtonFailure& e) {
    EXPECT_EQ(e.step(), 1);
    EXPECT_GT(e.residual(), 0.0);
  }
}

TEST(StateTest, NonFiniteNonlinearityIsReported) {
  ProblemSpec s = make_example_cubic({}, Domain{1, 1.0, 1.0}, 1.0);
  s.f.value = [](double y) { return y > 0.05 ? std::nan("") : y; };
  const Mesh m = Mesh::build_1d(1.0, 10, 1.0, 4);
  const EllipticOperator op = assemble_elliptic(m, s.diffusion);
  EXPECT_THROW(solve_state(s, op, Field::constant(m, 1.0)), NonFiniteValue);
}

TEST(LinearizedTest, ZeroDataGivesZero) {
  const Mesh m = Mesh::build_2d(1.0, 1.0, 5, 5, 1.0, 4);
  const EllipticOperator op = assemble_elliptic(m, Diffusion::constant(1.0));
  const Field z = solve_linearized(op, Field::constant(m, 2.0), Field::zeros(m),
                                   Eigen::VectorXd::Zero(m.num_nodes()));
  EXPECT_EQ(z.values().cwiseAbs().maxCoeff(), 0.0);
}

TEST(LinearizedTest, ZeroReactionMatchesLinearStateSolve) {
  const ProblemSpec s = heat_problem(Domain{2, 1.0, 1.0}, 1.0, 0.8);
  const Mesh m = Mesh::build_2d(1.0, 1.0, 7, 7, 1.0, 8);
  const EllipticOperator op = assemble_elliptic(m, s.diffusion);
  const Field u = random_field(m, 9, -1.0, 1.0);
  const Field y = solve_state(s, op, u).y;
  const Field z = solve_linearized(op, Field::zeros(m), u, y.level(0));
  EXPECT_LE((y.values() - z.values()).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(LinearizedTest, IsTheDerivativeOfTheStateMap) {
  // ||S(u + s v) - S(u) - s z|| = O(s^2) with z the linearized response.
  const ProblemSpec s = make_example_cubic({}, Domain{1, 1.0, 1.0}, 1.0);
  const Mesh m = Mesh::build_1d(1.0, 24, 1.0, 16);
  const EllipticOperator op = assemble_elliptic(m, s.diffusion);
  const Field u = random_field(m, 1, 0.0, 2.0);
  const Field v = random_field(m, 2, -1.0, 1.0);
  const Field y = solve_state(s, op, u).y;
  const Field z = solve_linearized(op, reaction_coefficient(s, m, y), v,
                                   Eigen::VectorXd::Zero(m.num_nodes()));
  std::vector<double> rem;
  for (double step : {1e-1, 5e-2, 2.5e-2}) {
    const Field ys = solve_state(s, op, u + step * v).y;
    rem.push_back((ys.values() - y.values() - step * z.values()).lpNorm<Eigen::Infinity>());
  }
  EXPECT_NEAR(rem[0] / rem[1], 4.0, 0.4);
  EXPECT_NEAR(rem[1] / rem[2], 4.0, 0.4);
}

TEST(LinearizedTest, RejectsIndefiniteStepMatrix) {
  const Mesh m = Mesh::build_1d(1.0, 5, 1.0, 2);
  const EllipticOperator op = assemble_elliptic(m, Diffusion::constant(1.0));
  try {
    solve_linearized(op, Field::constant(m, -1000.0), Field::constant(m, 1.0),
                     Eigen::VectorXd::Zero(m.num_nodes()));
    FAIL();
  } catch (const LinearSolverBreakdown& e) {
    EXPECT_LT(e.smallest_diagonal(), 0.0);
    EXPECT_EQ(e.step(), 1);
  }
}

TEST(AdjointTest, ZeroSourceGivesZero) {
  ProblemSpec s = make_example_cubic({}, Domain{1, 1.0, 1.0}, 1.0);
  s.cost.dy = [](const Point&, double, double) { return 0.0; };
  const Mesh m = Mesh::build_1d(1.0, 12, 1.0, 6);
  const EllipticOperator op = assemble_elliptic(m, s.diffusion);
  const Field y = solve_state(s, op, Field::constant(m, 0.4)).y;
  const Field phi = solve_adjoint(s, op, y, Field::constant(m, 0.4), Field::zeros(m));
  EXPECT_EQ(phi.values().cwiseAbs().maxCoeff(), 0.0);
}

TEST(AdjointTest, TimeReversalEqualsBackwardSweep) {
  const ProblemSpec s = make_example_cubic({}, Domain{2, 1.0, 1.0}, 1.0);
  const Mesh m = Mesh::build_2d(1.0, 1.0, 6, 5, 1.0, 7);
  const EllipticOperator op = assemble_elliptic(m, s.diffusion);
  const Field u = random_field(m, 4, 0.0, 1.0);
  const Field e = random_field(m, 8, 0.0, 0.5);
  const Field y = solve_state(s, op, u).y;
  const Field phi = solve_adjoint(s, op, y, u, e);

  // Forward linear solve with time-flipped coefficient and weighted source.
  const Field c = reaction_coefficient(s, m, y);
  Field cf = Field::zeros(m), rhs = Field::zeros(m);
  const int nt = m.nt();
  for (int n = 1; n <= nt; ++n) {
    for (int k = 0; k < m.num_nodes(); ++k) {
      const Point p = m.point(n, k);
      const double src = -s.cost.dy(p, y(n, k), u(n, k)) - e(n, k) * s.g.dy(p, y(n, k));
      cf(nt + 1 - n, k) = c(n, k);
      rhs(nt + 1 - n, k) = m.weight(k) * src;
    }
  }
  const Field z = solve_linearized(op, cf, rhs, Eigen::VectorXd::Zero(m.num_nodes()));
  double diff = 0.0;
  for (int n = 1; n <= nt; ++n) {
    for (int k = 0; k < m.num_nodes(); ++k) {
      diff = std::max(diff, std::abs(z(nt + 1 - n, k) / m.weight(k) - phi(n, k)));
    }
  }
  EXPECT_LE(diff, 1e-12 * std::max(1.0, phi.values().cwiseAbs().maxCoeff()));
}

TEST(AdjointTest, DualityWithLinearizedEquation) {
  // Discrete adjoint identity: sum_n dt <W s^n, z^n> = sum_n dt <W phi^n, v^n>
  // for z = linearized response to v and phi = backward solve with source s.
  const Mesh m = Mesh::build_2d(1.0, 1.0, 5, 6, 1.0, 9);
  const EllipticOperator op = assemble_elliptic(m, Diffusion::constant(1.3));
  const Field c = random_field(m, 10, 0.0, 2.0);
  const Field v = random_field(m, 11, -1.0, 1.0);
  const Field src = random_field(m, 12, -1.0, 1.0);
  const Field z = solve_linearized(op, c, v, Eigen::VectorXd::Zero(m.num_nodes()));
  const Field phi = solve_backward(op, c, src);
  EXPECT_NEAR(inner_q(m, src, z), inner_q(m, phi, v), 1e-12);
}

TEST(AprioriTest, ZeroInputsGiveZeroRatio) {
  const Mesh m = Mesh::build_1d(1.0, 10, 1.0, 5);
  const AprioriRatios r = apriori_check(m, Field::zeros(m), Field::zeros(m));
  EXPECT_EQ(r.linf_ratio, 0.0);
  EXPECT_EQ(r.dt_ratio, 0.0);
}

TEST(AprioriTest, RatioBoundedUnderControlScaling) {
  const ProblemSpec s = make_example_cubic({}, Domain{1, 1.0, 1.0}, 1.0);
  const Mesh m = Mesh::build_1d(1.0, 40, 1.0, 40);
  const EllipticOperator op = assemble_elliptic(m, s.diffusion);
  const Field base = Field::sample_q(m, [](const Point& q) { return 1.0 + std::sin(kPi * q.x[0]) * q.t; });
  std::vector<double> ratios;
  for (double scale : {1.0, 2.0, 5.0, 10.0}) {
    const Field u = scale * base;
    ratios.push_back(apriori_check(m, solve_state(s, op, u).y, u).linf_ratio);
  }
  const double first = ratios.front();
  for (double r : ratios) {
    EXPECT_GT(r, 0.0);
    // Bounded by a scale-independent constant: never exceeds the unscaled
    // ratio by more than 20%.
    EXPECT_LE(r, 1.2 * first);
  }
}

TEST(AprioriTest, RatiosStableUnderRefinement) {
  const ProblemSpec s = make_example_cubic({}, Domain{1, 1.0, 1.0}, 1.0);
  auto ufn = [](const Point& q) { return 0.5 + 0.5 * std::cos(2 * kPi * q.x[0]) * q.t; };
  std::vector<AprioriRatios> r;
  for (int n : {32, 64}) {
    const Mesh m = Mesh::build_1d(1.0, n - 1, 1.0, n);
    const EllipticOperator op = assemble_elliptic(m, s.diffusion);
    const Field u = Field::sample_q(m, ufn);
    r.push_back(apriori_check(m, solve_state(s, op, u).y, u));
  }
  EXPECT_NEAR(r[1].linf_ratio / r[0].linf_ratio, 1.0, 0.1);
  EXPECT_NEAR(r[1].dt_ratio / r[0].dt_ratio, 1.0, 0.1);
}

TEST(ComparisonTest, OrderedControlsGiveOrderedStates) {
  const ProblemSpec s = make_example_cubic({}, Domain{2, 1.0, 1.0}, 1.0);
  const Mesh m = Mesh::build_2d(1.0, 1.0, 8, 8, 1.0, 8);
  const EllipticOperator op = assemble_elliptic(m, s.diffusion);
  for (int trial = 0; trial < 5; ++trial) {
    const Field u2 = random_field(m, 100 + trial, -1.0, 1.0);
    const Field u1 = u2 + random_field(m, 200 + trial, 0.0, 1.0);
    const Field y1 = solve_state(s, op, u1).y;
    const Field y2 = solve_state(s, op, u2).y;
    EXPECT_GE((y1.values() - y2.values()).minCoeff(), -1e-12);
  }
}

TEST(ConvergenceTest, ManufacturedSolutionSpatialOrder) {
  for (double order : testing::spatial_orders()) EXPECT_GE(order, 1.9);
}

TEST(ConvergenceTest, ManufacturedSolutionTemporalOrder) {
  for (double order : testing::temporal_orders()) EXPECT_GE(order, 0.9);
}

}  // namespace
}  // namespace parakkt
