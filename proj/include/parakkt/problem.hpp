#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "parakkt/field.hpp"
#include "parakkt/mesh.hpp"

namespace parakkt {

/// Running cost L(x, t, y, u) and its partial derivatives.
struct RunningCost {
  using Fn = std::function<double(const Point&, double y, double u)>;
  Fn value, dy, du, dyy, dyu, duu;
};

/// Autonomous state nonlinearity f(y) with f', f''.
struct Nonlinearity {
  using Fn = std::function<double(double)>;
  Fn value, d1, d2;
};

/// Mixed-constraint function g(x, t, y) with g_y, g_yy; the constraint is
/// g(x, t, y) + eps*u <= 0.
struct MixedConstraint {
  using Fn = std::function<double(const Point&, double y)>;
  Fn value, dy, dyy;
};

/// All data of
///   min  int_Q L(x, t, y, u)
///   s.t. y_t + A y + f(y) = u,  y = 0 on the boundary,  y(0) = y0,
///        a <= u <= b,  g(x, t, y) + eps*u <= 0.
/// Callbacks must be pure.
struct ProblemSpec {
  std::string name;
  RunningCost cost;
  Nonlinearity f;
  MixedConstraint g;
  double a = 0.0;
  double b = 1.0;
  double eps = 1.0;
  std::function<double(const std::array<double, 2>&)> y0;
  Diffusion diffusion = Diffusion::constant(1.0);
  Domain domain;
  double horizon = 1.0;
  /// Catalog parameters this problem was built from (reported, never read back).
  std::map<std::string, double> parameters;
};

struct CubicExampleParams {
  double gamma = 0.1;             // separation margin in g = -y - gamma
  double b = 1.0;                 // upper control bound
  double target = 0.3;            // constant tracking target y_d
  double control_weight = 0.05;   // lambda in (lambda/2) u^2
  double initial_amplitude = 0.1; // y0 = amplitude * sine bump >= 0
  double diffusion = 1.0;
};

/// f(y) = y^3 + y, g = -y - gamma, eps = 1, a = 0,
/// L = 1/2 (y - y_d)^2 + lambda/2 u^2. Throws InvalidArgument when gamma <= 0,
/// b <= 0 or lambda <= 0.
ProblemSpec make_example_cubic(const CubicExampleParams& params,
                               const Domain& domain, double horizon);

struct ConvexQuadraticParams {
  /// Tracking target y_d(x, t); defaults to target + target_amplitude*bump(x).
  std::function<double(const Point&)> target_fn;
  double target = 0.5;
  double target_amplitude = 0.0;
  double control_weight = 1.0;  // lambda
  double reaction = 0.0;        // f(y) = reaction * y
  double g_slope = 0.0;         // g = g_slope*y + g_offset
  double g_offset = -1.0;
  double eps = 1.0;
  double a = -10.0;
  double b = 10.0;
  double initial_amplitude = 0.0;
  double diffusion = 1.0;
};

/// Linear f, affine g, quadratic tracking cost: after discretization a convex
/// QP. Throws InvalidArgument when lambda <= 0, reaction < 0, eps <= 0 or
/// a >= b.
ProblemSpec make_convex_quadratic(const ConvexQuadraticParams& params,
                                  const Domain& domain, double horizon);

/// y0 = amplitude * prod_i sin(pi x_i / l_i).
std::function<double(const std::array<double, 2>&)> sine_bump(const Domain& domain,
                                                             double amplitude);

/// Structural checks: a < b, eps > 0, all callbacks present, f(0) = 0, y0
/// vanishing on the boundary of `mesh`, mesh matches domain and horizon.
/// Throws InvalidArgument.
void validate_problem(const ProblemSpec& spec, const Mesh& mesh);

/// Cross-checks every derivative callback against central differences at
/// `samples` random points (x in the domain, t in (0, T), |y| <= 2, u in
/// [a, b]): |d - fd| <= 1e-5 (1 + |d|). Throws InvalidArgument naming the
/// first mismatching derivative.
void check_derivatives(const ProblemSpec& spec, int samples = 100,
                       std::uint64_t seed = 7);

/// J(y, u) = sum_{n=1}^{nt} dt sum_k w_k L(x_k, t_n, y, u); exact for
/// integrands constant in (x, t). Throws NonFiniteValue with the offending
/// node.
double eval_objective(const ProblemSpec& spec, const Mesh& mesh, const Field& y,
                      const Field& u);

struct HypothesisCheck {
  std::string name;
  bool pass = false;
  double margin = 0.0;  // worst sampled margin (>= 0 means satisfied)
  Point where;
  double y = 0.0;
  double u = 0.0;
};

struct HypothesisReport {
  double f_at_zero = 0.0;
  HypothesisCheck h2;   // f(0) = 0 and f'(y) >= 0; margin = min f'
  HypothesisCheck h4;   // f'(y) >= -g_y/eps >= 0; margin = min of both gaps
  HypothesisCheck h6;   // L_uu >= gamma_1 > 0; margin = min L_uu
};

/// Sampling-based check of the structural hypotheses over y_range x u_range
/// (y is swept on a uniform grid that always contains y = 0 when in range).
HypothesisReport check_hypotheses(const ProblemSpec& spec,
                                  std::pair<double, double> y_range,
                                  std::pair<double, double> u_range, int samples,
                                  std::uint64_t seed = 11);

}  // namespace parakkt
