#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "parakkt/field.hpp"
#include "parakkt/kkt.hpp"
#include "parakkt/mesh.hpp"
#include "parakkt/pde.hpp"
#include "parakkt/problem.hpp"

namespace parakkt {

struct OptimizeParams {
  double c0 = 1.0;            // initial penalty
  double growth = 10.0;       // penalty factor when feasibility stalls
  double stall_factor = 4.0;  // required feasibility improvement per outer step
  double c_max = 1e8;
  double damping = 1.0;       // e <- max(0, e + damping * c * h)
  double inner_tol = 1e-10;   // max norm of the projected gradient
  double stop_tol = 1e-9;     // stop once every KKT residual is below this
  double kkt_tol = 1e-6;      // certification threshold
  double tol_act = -1.0;      // < 0: 1e-8 (b - a)
  int max_outer = 40;
  int max_inner = 3000;
  double armijo_sigma = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 40;
  /// Relative slack in the Armijo test that absorbs the noise of inexact
  /// state solves; without it the line search stalls near the optimum.
  double armijo_slack = 1e-12;
  PdeOptions pde;

  /// Throws InvalidArgument naming the first bad entry.
  void validate() const;
};

struct HistoryEntry {
  int outer = 0;
  int inner_iterations = 0;
  double J = 0.0;
  double feasibility = 0.0;     // max(0, max(g + eps u))
  double stationarity = 0.0;    // KKT stationarity after multiplier recovery
  double max_residual = 0.0;    // worst KKT residual
  double penalty = 0.0;
};

struct Solution {
  Field u, y, phi, e, ehat;
  double J = 0.0;
  ActiveSets sets;
  KKTReport kkt;
  std::vector<HistoryEntry> history;
  int outer_iterations = 0;
  bool certified = false;
  std::string status;
};

/// Nodewise clamp to [a, b].
Field project_box(const Field& u, double a, double b);

/// J(y, u) + int e (g(y) + eps u).
double augmented_objective(const ProblemSpec& spec, const Mesh& mesh, const Field& y,
                           const Field& u, const Field& e);

/// Gradient (with respect to the discrete L2(Q) inner product) of
/// u -> J(y_u, u) + int e (g(y_u) + eps u) for fixed e: L_u - phi_e + eps e.
Field reduced_gradient(const ProblemSpec& spec, const EllipticOperator& op, const Field& u,
                       const Field& e, const PdeOptions& options = {});

/// Augmented Lagrangian on the mixed constraint, projected gradient (BB steps,
/// Armijo backtracking) on the box. Final multipliers come from
/// solve_coupled_adjoint. Budget exhaustion returns the best iterate with
/// certified = false.
Solution solve_augmented_lagrangian(const ProblemSpec& spec, const EllipticOperator& op,
                                    const Field& u_init, const OptimizeParams& params = {});

/// State, adjoint and multipliers at a given control: solves the state,
/// classifies the active sets, solves the coupled adjoint and evaluates the
/// KKT residuals. The returned history is empty.
Solution certify_control(const ProblemSpec& spec, const EllipticOperator& op, const Field& u,
                         double kkt_tol = 1e-6, double tol_act = -1.0,
                         const PdeOptions& options = {});

/// Midpoint initial control (a + b)/2 on levels 1..nt.
Field default_initial_control(const ProblemSpec& spec, const Mesh& mesh);

struct OracleResult {
  Solution solution;
  int iterations = 0;
  double qp_residual = 0.0;   // max norm of the dense KKT residual
  Eigen::MatrixXd S;          // control-to-state map on levels 1..nt
  Eigen::VectorXd s0;         // response to y0 with zero control
  Eigen::MatrixXd hessian;    // reduced Hessian of J in the control unknowns
};

/// Dense reference solver for convex instances (linear f, affine g,
/// quadratic L, at most 200 control unknowns): assembles the space-time system
/// directly, forms the QP and runs a primal active-set method started at
/// u = a. Throws InvalidArgument for nonconvex or oversized instances, or
/// when u = a violates the mixed constraint.
OracleResult brute_force_oracle(const ProblemSpec& spec, const EllipticOperator& op);

}  // namespace parakkt
