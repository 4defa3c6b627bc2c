#include "parakkt/problem.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "parakkt/error.hpp"

namespace parakkt {
namespace {

const Domain kUnitSquare{2, 1.0, 1.0};
const Domain kUnitInterval{1, 1.0, 1.0};

TEST(CubicExampleTest, SeparationSignConditionHoldsWithEqualityAtZero) {
  CubicExampleParams p;
  p.gamma = 0.1;
  p.b = 1.0;
  const ProblemSpec s = make_example_cubic(p, kUnitSquare, 1.0);
  const Point pt{{0.3, 0.4}, 0.5};
  for (double y : {-1.5, -0.2, 0.0, 0.7, 2.0}) {
    // f'(y) = 3y^2 + 1 >= 1 = -g_y/eps >= 0
    EXPECT_GE(s.f.d1(y), -s.g.dy(pt, y) / s.eps);
    EXPECT_EQ(-s.g.dy(pt, y) / s.eps, 1.0);
  }
  EXPECT_EQ(s.f.d1(0.0), -s.g.dy(pt, 0.0) / s.eps);
  EXPECT_EQ(s.eps, 1.0);
  EXPECT_EQ(s.a, 0.0);
  EXPECT_EQ(s.g.value(pt, 0.25), -0.25 - 0.1);
}

TEST(CubicExampleTest, FOfZeroIsExactlyZero) {
  const ProblemSpec s = make_example_cubic({}, kUnitInterval, 1.0);
  EXPECT_EQ(s.f.value(0.0), 0.0);
  ConvexQuadraticParams q;
  q.reaction = 2.5;
  EXPECT_EQ(make_convex_quadratic(q, kUnitSquare, 1.0).f.value(0.0), 0.0);
}

TEST(CubicExampleTest, RejectsBadParameters) {
  CubicExampleParams p;
  p.gamma = 0.0;
  EXPECT_THROW(make_example_cubic(p, kUnitSquare, 1.0), InvalidArgument);
  p.gamma = -1.0;
  EXPECT_THROW(make_example_cubic(p, kUnitSquare, 1.0), InvalidArgument);
  p = {};
  p.control_weight = 0.0;
  EXPECT_THROW(make_example_cubic(p, kUnitSquare, 1.0), InvalidArgument);
  EXPECT_THROW(make_example_cubic({}, Domain{3, 1.0, 1.0}, 1.0), UnsupportedDimension);
}

TEST(CubicExampleTest, InitialDatumIsNonnegativeAndVanishesOnBoundary) {
  const ProblemSpec s = make_example_cubic({}, kUnitSquare, 1.0);
  const Mesh m = Mesh::build_2d(1.0, 1.0, 8, 8, 1.0, 4);
  EXPECT_NO_THROW(validate_problem(s, m));
  for (int k = 0; k < m.num_nodes(); ++k) EXPECT_GE(s.y0(m.coords(k)), 0.0);
}

TEST(ConvexQuadraticTest, RejectsInvalidParameters) {
  ConvexQuadraticParams p;
  p.control_weight = 0.0;
  EXPECT_THROW(make_convex_quadratic(p, kUnitInterval, 1.0), InvalidArgument);
  p = {};
  p.reaction = -1.0;
  EXPECT_THROW(make_convex_quadratic(p, kUnitInterval, 1.0), InvalidArgument);
  p = {};
  p.a = 2.0;
  p.b = 1.0;
  EXPECT_THROW(make_convex_quadratic(p, kUnitInterval, 1.0), InvalidArgument);
}

TEST(ConvexQuadraticTest, LinearReactionSatisfiesMonotonicity) {
  ConvexQuadraticParams p;
  p.reaction = 1.0;
  const ProblemSpec s = make_convex_quadratic(p, kUnitInterval, 1.0);
  const HypothesisReport r = check_hypotheses(s, {-2.0, 2.0}, {s.a, s.b}, 21);
  EXPECT_TRUE(r.h2.pass);
  EXPECT_DOUBLE_EQ(r.h2.margin, 1.0);
}

TEST(ValidateTest, RejectsMismatchedMeshAndBoundaryData) {
  ProblemSpec s = make_example_cubic({}, kUnitSquare, 1.0);
  EXPECT_THROW(validate_problem(s, Mesh::build_2d(2.0, 1.0, 4, 4, 1.0, 2)), InvalidArgument);
  EXPECT_THROW(validate_problem(s, Mesh::build_2d(1.0, 1.0, 4, 4, 2.0, 2)), InvalidArgument);
  s.y0 = [](const std::array<double, 2>&) { return 1.0; };
  EXPECT_THROW(validate_problem(s, Mesh::build_2d(1.0, 1.0, 4, 4, 1.0, 2)), InvalidArgument);
  s = make_example_cubic({}, kUnitSquare, 1.0);
  s.b = -1.0;
  EXPECT_THROW(validate_problem(s, Mesh::build_2d(1.0, 1.0, 4, 4, 1.0, 2)), InvalidArgument);
}

TEST(DerivativeCheckTest, DetectsWrongDerivative) {
  ProblemSpec s = make_example_cubic({}, kUnitInterval, 1.0);
  EXPECT_NO_THROW(check_derivatives(s));
  s.f.d1 = [](double y) { return 3.0 * y * y; };
  EXPECT_THROW(check_derivatives(s), InvalidArgument);
  s = make_example_cubic({}, kUnitInterval, 1.0);
  s.cost.du = [](const Point&, double, double u) { return 2.0 * u; };
  try {
    check_derivatives(s);
    FAIL() << "expected a derivative mismatch";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("L_u"), std::string::npos);
  }
}

TEST(ObjectiveTest, ConstantIntegrandIsExact) {
  ProblemSpec s = make_example_cubic({}, kUnitInterval, 1.0);
  s.cost.value = [](const Point&, double, double u) { return u * u; };
  const Mesh m = Mesh::build_1d(1.0, 9, 1.0, 7);
  const Field u = Field::constant(m, 2.0);
  const Field y = Field::zeros(m);
  EXPECT_NEAR(eval_objective(s, m, y, u), 4.0, 1e-13);

  const Mesh m2 = Mesh::build_2d(1.0, 2.0, 5, 6, 0.5, 3);
  ProblemSpec s2 = make_example_cubic({}, Domain{2, 1.0, 2.0}, 0.5);
  s2.cost.value = [](const Point&, double, double) { return 3.0; };
  EXPECT_NEAR(eval_objective(s2, m2, Field::zeros(m2), Field::zeros(m2)), 3.0 * 2.0 * 0.5, 1e-13);
}

TEST(ObjectiveTest, ZeroStateZeroCost) {
  ProblemSpec s = make_example_cubic({}, kUnitInterval, 1.0);
  s.cost.value = [](const Point&, double y, double) { return y * y; };
  const Mesh m = Mesh::build_1d(1.0, 9, 1.0, 7);
  EXPECT_EQ(eval_objective(s, m, Field::zeros(m), Field::constant(m, 0.3)), 0.0);
}

TEST(ObjectiveTest, ConvergesToHighResolutionQuadrature) {
  // L = 1/2 (y - y_d)^2 + 1/2 u^2 with smooth stored fields; the refined value
  // approaches the integral computed by a fine independent midpoint rule.
  ConvexQuadraticParams p;
  p.target = 0.2;
  p.control_weight = 1.0;
  const ProblemSpec s = make_convex_quadratic(p, kUnitInterval, 1.0);
  auto yfn = [](const Point& q) { return std::sin(3.0 * q.x[0]) * std::exp(-q.t); };
  auto ufn = [](const Point& q) { return q.x[0] * (1.0 - q.x[0]) + q.t; };
  auto integrand = [&](double x, double t) {
    const Point q{{x, 0.0}, t};
    return s.cost.value(q, yfn(q), ufn(q));
  };
  double reference = 0.0;
  const int fine = 2000;
  for (int i = 0; i < fine; ++i) {
    for (int j = 0; j < fine; ++j) {
      reference += integrand((i + 0.5) / fine, (j + 0.5) / fine);
    }
  }
  reference /= static_cast<double>(fine) * fine;

  std::vector<double> err;
  for (int n : {16, 32, 64}) {
    const Mesh m = Mesh::build_1d(1.0, n, 1.0, n);
    err.push_back(std::abs(eval_objective(s, m, Field::sample(m, yfn), Field::sample(m, ufn)) - reference));
  }
  // Right-endpoint rule in time: first order overall.
  EXPECT_LT(err[2], err[1]);
  EXPECT_LT(err[1], err[0]);
  EXPECT_GT(err[1] / err[2], 1.7);
}

TEST(ObjectiveTest, ReportsNonFiniteNode) {
  ProblemSpec s = make_example_cubic({}, kUnitInterval, 1.0);
  s.cost.value = [](const Point& p, double, double) { return p.x[0] > 0.5 ? std::nan("") : 0.0; };
  const Mesh m = Mesh::build_1d(1.0, 3, 1.0, 2);
  try {
    eval_objective(s, m, Field::zeros(m), Field::zeros(m));
    FAIL();
  } catch (const NonFiniteValue& e) {
    EXPECT_EQ(e.level(), 1);
    EXPECT_EQ(e.node(), 2);
  }
}

TEST(HypothesisTest, CubicMonotonicityMarginAtZero) {
  const ProblemSpec s = make_example_cubic({}, kUnitSquare, 1.0);
  const HypothesisReport r = check_hypotheses(s, {-2.0, 2.0}, {0.0, 1.0}, 41);
  EXPECT_TRUE(r.h2.pass);
  EXPECT_DOUBLE_EQ(r.h2.margin, 1.0);
  EXPECT_DOUBLE_EQ(r.h2.y, 0.0);
  EXPECT_TRUE(r.h4.pass);
  EXPECT_NEAR(r.h4.margin, 0.0, 1e-15);
}

TEST(HypothesisTest, ReportsControlCurvature) {
  CubicExampleParams p;
  p.control_weight = 0.5;
  const ProblemSpec s = make_example_cubic(p, kUnitSquare, 1.0);
  const HypothesisReport r = check_hypotheses(s, {-1.0, 1.0}, {0.0, 1.0}, 11);
  EXPECT_TRUE(r.h6.pass);
  EXPECT_DOUBLE_EQ(r.h6.margin, 0.5);
}

TEST(HypothesisTest, WrongSignOfConstraintSlopeFailsSeparation) {
  ProblemSpec s = make_example_cubic({}, kUnitSquare, 1.0);
  s.g.value = [](const Point&, double y) { return y; };
  s.g.dy = [](const Point&, double) { return 1.0; };
  const HypothesisReport r = check_hypotheses(s, {-1.0, 1.0}, {0.0, 1.0}, 11);
  EXPECT_FALSE(r.h4.pass);
  EXPECT_LT(r.h4.margin, 0.0);
}

}  // namespace
}  // namespace parakkt

namespace parakkt {
namespace {

TEST(ObjectiveTest, MatchesIndependentNodalQuadrature) {
  // Independent evaluation of the same discrete rule with the weights written
  // out per axis: interior spacing h, half cell added next to the boundary.
  ConvexQuadraticParams p;
  p.target = 0.3;
  p.target_amplitude = 0.7;
  const Domain dom{2, 1.0, 0.5};
  const ProblemSpec s = make_convex_quadratic(p, dom, 2.0);
  const Mesh m = Mesh::build_2d(1.0, 0.5, 7, 5, 2.0, 6);
  auto yfn = [](const Point& q) { return std::cos(q.x[0] + 2 * q.x[1]) * q.t; };
  auto ufn = [](const Point& q) { return q.x[0] - q.x[1] * q.t; };
  double expected = 0.0;
  for (int n = 1; n <= 6; ++n) {
    const double t = n * (2.0 / 6);
    for (int j = 1; j <= 5; ++j) {
      for (int i = 1; i <= 7; ++i) {
        const double hx = 1.0 / 8, hy = 0.5 / 6;
        const double wx = (i == 1 || i == 7) ? 1.5 * hx : hx;
        const double wy = (j == 1 || j == 5) ? 1.5 * hy : hy;
        const Point q{{i * hx, j * hy}, t};
        expected += (2.0 / 6) * wx * wy * s.cost.value(q, yfn(q), ufn(q));
      }
    }
  }
  const double got = eval_objective(s, m, Field::sample(m, yfn), Field::sample(m, ufn));
  EXPECT_NEAR(got, expected, 1e-10 * std::abs(expected));
}

}  // namespace
}  // namespace parakkt
