#pragma once

#include <vector>

#include <Eigen/Core>

#include "parakkt/field.hpp"
#include "parakkt/mesh.hpp"
#include "parakkt/problem.hpp"

namespace parakkt {

struct PdeOptions {
  enum class NewtonStart { previous_level, zero };

  double newton_tol = 1e-10;  // on the step residual divided by dt, max norm
  int newton_max_iterations = 50;
  int max_halvings = 30;
  double lin_tol = 1e-12;     // relative CG tolerance
  int cg_max_iterations = 20000;
  NewtonStart newton_start = NewtonStart::previous_level;
};

struct PdeSolveDiagnostics {
  std::vector<int> newton_iterations;  // per time step
  std::vector<double> max_residual;    // accepted residual per step (max norm / dt)
  std::vector<int> cg_iterations;      // summed over Newton iterations, per step
  double wall_seconds = 0.0;
};

struct StateSolution {
  Field y;
  PdeSolveDiagnostics diagnostics;
};

/// Implicit Euler for y_t + A y + f(y) = u: for n = 1..nt solve
///   (I + dt A) y^n + dt f(y^n) = y^{n-1} + dt u^n
/// by damped Newton (step halving). Level 0 is y0 sampled at the nodes.
/// Throws NewtonFailure, NonFiniteValue, LinearSolverBreakdown.
StateSolution solve_state(const ProblemSpec& spec, const EllipticOperator& op, const Field& u,
                          const PdeOptions& options = {});

/// Linear equation z_t + A z + c z = rhs, z(0) = init, by implicit Euler:
///   (I + dt (A + diag c^n)) z^n = z^{n-1} + dt rhs^n.
/// Throws LinearSolverBreakdown when the step matrix is not positive definite.
Field solve_linearized(const EllipticOperator& op, const Field& c, const Field& rhs,
                       const Eigen::VectorXd& init, const PdeOptions& options = {});

/// Backward sweep of the discrete adjoint of the implicit Euler scheme:
///   (I + dt (A + diag c^n)) psi^n = psi^{n+1} + dt W s^n,  psi^{nt+1} = 0,
/// for n = nt..1, returning phi^n = psi^n / W (W the nodal quadrature
/// weights). Level 0 of the result is zero.
Field solve_backward(const EllipticOperator& op, const Field& c, const Field& source,
                     const PdeOptions& options = {});

/// Adjoint state of -phi_t + A phi + f'(y) phi = -L_y - e g_y with zero
/// terminal data, discretized as the exact adjoint of solve_state, so that
/// the reduced gradient of J + int e (g + eps u) is L_u - phi + eps e.
Field solve_adjoint(const ProblemSpec& spec, const EllipticOperator& op, const Field& y,
                    const Field& u, const Field& e, const PdeOptions& options = {});

/// f'(y) sampled on levels 1..nt.
Field reaction_coefficient(const ProblemSpec& spec, const Mesh& mesh, const Field& y);

struct AprioriRatios {
  int p = 4;
  double y_linf = 0.0;
  double u_lp_l2 = 0.0;   // ||u||_{L^p(0,T;L^2)}
  double y0_linf = 0.0;
  double linf_ratio = 0.0;  // y_linf / (u_lp_l2 + y0_linf)
  double yt_l2 = 0.0;     // ||(y^n - y^{n-1})/dt||_{L^2(Q)}
  double u_l2 = 0.0;
  double y0_h1 = 0.0;     // discrete H^1_0 seminorm of y0
  double dt_ratio = 0.0;    // yt_l2 / (u_l2 + y0_linf + y0_h1)
};

/// Discrete a-priori ratios of a computed state; 0 when the numerator is 0.
AprioriRatios apriori_check(const Mesh& mesh, const Field& y, const Field& u, int p = 4);

}  // namespace parakkt
