#include "parakkt/optimize.hpp"

#include <random>

#include <gtest/gtest.h>

#include "checks.hpp"
#include "instances.hpp"
#include "parakkt/error.hpp"

namespace parakkt {
namespace {

TEST(ProjectBoxTest, ClampsLevelsOneToNt) {
  const Mesh m = Mesh::build_1d(1.0, 3, 1.0, 2);
  Field u = Field::zeros(m);
  u(1, 0) = -3.0;
  u(1, 1) = 0.5;
  u(2, 2) = 7.0;
  const Field p = project_box(u, 0.0, 1.0);
  EXPECT_EQ(p(1, 0), 0.0);
  EXPECT_EQ(p(1, 1), 0.5);
  EXPECT_EQ(p(2, 2), 1.0);
}

TEST(ReducedGradientTest, MatchesFiniteDifferencesOnTheCubicExample) {
  const ProblemSpec spec = make_example_cubic({}, Domain{1, 1.0, 1.0}, 1.0);
  const Mesh m = Mesh::build_1d(1.0, 12, 1.0, 12);
  const EllipticOperator op = assemble_elliptic(m, spec.diffusion);
  std::mt19937_64 rng(3);
  const Field u = testing::random_q(m, rng, 0.0, 1.0);
  const Field e = testing::random_q(m, rng, 0.0, 0.5);
  const auto check = testing::fd_gradient_check(spec, op, u, e, 5, 11);
  EXPECT_LT(check.max_rel_error, 1e-6);
}

TEST(ReducedGradientTest, MatchesFiniteDifferencesWithStateDependentConstraint) {
  ConvexQuadraticParams p;
  p.g_slope = -0.7;
  p.reaction = 2.0;
  const ProblemSpec spec = make_convex_quadratic(p, Domain{2, 1.0, 1.0}, 1.0);
  const Mesh m = Mesh::build_2d(1.0, 1.0, 5, 4, 1.0, 6);
  const EllipticOperator op = assemble_elliptic(m, spec.diffusion);
  std::mt19937_64 rng(5);
  const Field u = testing::random_q(m, rng, -1.0, 1.0);
  const Field e = testing::random_q(m, rng, 0.0, 2.0);
  EXPECT_LT(testing::fd_gradient_check(spec, op, u, e, 5, 13).max_rel_error, 1e-6);
}

TEST(AugmentedLagrangianTest, MatchesTheOracleOnConvexInstances) {
  for (const auto& inst : testing::convex_instances()) {
    SCOPED_TRACE(inst.name);
    const Mesh m = inst.mesh();
    const ProblemSpec spec = inst.spec();
    const EllipticOperator op = assemble_elliptic(m, spec.diffusion);
    const Solution o = brute_force_oracle(spec, op).solution;
    const Solution s = solve_augmented_lagrangian(spec, op, default_initial_control(spec, m));
    EXPECT_TRUE(s.certified);
    EXPECT_LT(max_abs_q(s.u - o.u), 1e-6);
    EXPECT_LT(max_abs_q(s.e - o.e), 1e-5);
    EXPECT_LT(max_abs_q(s.ehat - o.ehat), 1e-5);
    EXPECT_NEAR(s.J, o.J, 1e-9);
  }
}

TEST(AugmentedLagrangianTest, RecordsOneHistoryEntryPerOuterIteration) {
  const ProblemSpec spec = make_example_cubic({}, Domain{1, 1.0, 1.0}, 1.0);
  const Mesh m = Mesh::build_1d(1.0, 16, 1.0, 16);
  const EllipticOperator op = assemble_elliptic(m, spec.diffusion);
  const Solution s = solve_augmented_lagrangian(spec, op, default_initial_control(spec, m));
  ASSERT_TRUE(s.certified);
  EXPECT_EQ(static_cast<int>(s.history.size()), s.outer_iterations);
  EXPECT_LE(s.kkt.max_residual(), 1e-9);
  EXPECT_GE(min_q(s.u), spec.a);
  EXPECT_LE(max_q(s.u), spec.b);
}

TEST(AugmentedLagrangianTest, BudgetExhaustionKeepsBestIterate) {
  const ProblemSpec spec = make_example_cubic({}, Domain{1, 1.0, 1.0}, 1.0);
  const Mesh m = Mesh::build_1d(1.0, 16, 1.0, 16);
  const EllipticOperator op = assemble_elliptic(m, spec.diffusion);
  OptimizeParams prm;
  prm.max_outer = 1;
  const Solution s = solve_augmented_lagrangian(spec, op, default_initial_control(spec, m), prm);
  EXPECT_FALSE(s.certified);
  EXPECT_EQ(s.status, "budget exhausted");
  EXPECT_EQ(s.history.size(), 1u);
  EXPECT_TRUE(s.u.matches(m));
  EXPECT_TRUE(s.u.all_finite());
}

TEST(OptimizeParamsTest, ValidateRejectsNonsense) {
  OptimizeParams p;
  EXPECT_NO_THROW(p.validate());
  p.growth = 1.0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = {};
  p.max_outer = 0;
  EXPECT_THROW(p.validate(), InvalidArgument);
}

TEST(OracleTest, RejectsNonconvexAndOversizedInstances) {
  const ProblemSpec cubic = make_example_cubic({}, Domain{1, 1.0, 1.0}, 1.0);
  const Mesh small = Mesh::build_1d(1.0, 5, 1.0, 5);
  EXPECT_THROW(brute_force_oracle(cubic, assemble_elliptic(small, cubic.diffusion)),
               InvalidArgument);
  const ProblemSpec convex = make_convex_quadratic({}, Domain{1, 1.0, 1.0}, 1.0);
  const Mesh big = Mesh::build_1d(1.0, 21, 1.0, 10);
  EXPECT_THROW(brute_force_oracle(convex, assemble_elliptic(big, convex.diffusion)),
               InvalidArgument);
}

TEST(OracleTest, DenseMapReproducesTheStateSolver) {
  const auto inst = testing::convex_instances()[4];
  const Mesh m = inst.mesh();
  const ProblemSpec spec = inst.spec();
  const EllipticOperator op = assemble_elliptic(m, spec.diffusion);
  const OracleResult o = brute_force_oracle(spec, op);
  const Field y = solve_state(spec, op, o.solution.u).y;
  EXPECT_LT(max_abs_q(y - o.solution.y), 1e-10);
}

}  // namespace
}  // namespace parakkt
