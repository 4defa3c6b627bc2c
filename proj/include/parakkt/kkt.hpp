#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "parakkt/field.hpp"
#include "parakkt/mesh.hpp"
#include "parakkt/pde.hpp"
#include "parakkt/problem.hpp"

namespace parakkt {

/// Boolean grid function in the Field layout (level * num_nodes + node);
/// level 0 entries are always false.
using Mask = std::vector<std::uint8_t>;

struct ActiveSets {
  Mask mask_a;   // u = a
  Mask mask_b;   // u = b
  Mask mask_ab;  // a < u < b
  Mask mask_0;   // g + eps u = 0
  double tol_act = 0.0;

  /// Nodes in both mask_b and mask_0 (outside H4').
  int degenerate_count() const;
};

/// Default tolerance 1e-8 (b - a).
double default_tol_act(const ProblemSpec& spec);

/// Classifies Q-nodes (levels 1..nt) by |u - a| <= tol, |u - b| <= tol and
/// |g + eps u| <= tol. A node within tol of both bounds goes to mask_a.
ActiveSets classify_active_sets(const ProblemSpec& spec, const Mesh& mesh, const Field& y,
                                const Field& u, double tol_act);

/// Quadrature measure dt * sum w over the nodes of `m`.
double region_measure(const Mesh& mesh, const Mask& m);
int count(const Mask& m);

/// g(x, t, y) + eps u on levels 1..nt.
Field mixed_constraint_values(const ProblemSpec& spec, const Mesh& mesh, const Field& y,
                              const Field& u);

struct SeparationMargins {
  double gamma = 0.0;   // -max(a - u + eps u + g); > 0 means H4 holds
  double gamma_b = 0.0; // -max over mask_b of (g + eps b); +inf when mask_b is empty
  int worst_level = 0;
  int worst_node = 0;
};

SeparationMargins check_separation(const ProblemSpec& spec, const Mesh& mesh, const Field& y,
                                   const Field& u, const Mask* mask_b = nullptr);

struct Multipliers {
  Field e;
  Field ehat;
};

/// Nodewise split of zeta = phi - L_u into eps e + ehat according to the
/// active sets. On mask_ab without mask_0 both stay zero and zeta is left as
/// the stationarity residual.
Multipliers recover_multipliers(const ProblemSpec& spec, const Mesh& mesh, const Field& y,
                                const Field& u, const Field& phi, const ActiveSets& sets);

struct CoupledAdjoint {
  Field phi;
  Multipliers multipliers;
  int fixed_point_iterations = 0;  // > 1 only with degenerate nodes
};

/// Adjoint state consistent with the recovered multipliers. On mask_0 inside
/// (a, b) the unknown e = (phi - L_u)/eps is eliminated, which turns the
/// backward equation into one with reaction f' + g_y/eps (nonnegative under
/// H4). Degenerate mask_b/mask_0 nodes are handled by a lagged fixed point.
CoupledAdjoint solve_coupled_adjoint(const ProblemSpec& spec, const EllipticOperator& op,
                                     const Field& y, const Field& u, const ActiveSets& sets,
                                     const PdeOptions& options = {});

struct KKTReport {
  double stationarity = 0.0;        // max |L_u - phi + eps e + ehat|
  double adjoint = 0.0;             // discrete adjoint equation, per unit measure
  double complementarity = 0.0;     // max |e (g + eps u)|
  double e_sign = 0.0;              // max(0, -min e)
  double ehat_sign_a = 0.0;         // max(0, ehat) on mask_a
  double ehat_sign_b = 0.0;         // max(0, -ehat) on mask_b
  double ehat_inactive = 0.0;       // max |ehat| on mask_ab
  double feasibility = 0.0;         // max(0, max(g + eps u))
  double box_violation = 0.0;       // max(0, a - u, u - b)
  double gamma = 0.0;               // H4 margin (signed)
  double gamma_b = 0.0;             // H4' margin (signed)
  double measure_a = 0.0;
  double measure_b = 0.0;
  double measure_ab = 0.0;
  double measure_0 = 0.0;
  int degenerate_nodes = 0;
  double kkt_tol = 1e-6;
  bool certified = false;

  /// Worst of the nonnegative residual entries.
  double max_residual() const;
  nlohmann::json to_json() const;
};

KKTReport kkt_residuals(const ProblemSpec& spec, const EllipticOperator& op, const Field& y,
                        const Field& u, const Field& phi, const Field& e, const Field& ehat,
                        const ActiveSets& sets, double kkt_tol = 1e-6);

struct RobinsonReport {
  double rho = 0.0;
  double c2 = 0.0;           // ||u_rho - u||_inf / rho
  double gamma = 0.0;        // H4 margin at the point
  double margin[3] = {0, 0, 0};  // -max of the left-hand side of each inequality
  double delta = 0.0;        // min of the three margins
  int violated = 0;          // 1-based index of the worst inequality when delta <= 0
  int worst_level = 0;
  int worst_node = 0;
  int size_q_a = 0;
  int size_q_rho = 0;
  bool success = false;
  std::string message;

  nlohmann::json to_json() const;
};

/// The interior-direction construction behind Robinson's condition: builds
/// z_u, xi_rho, u_rho, Q_rho, the modified control uhat_rho and its response,
/// then measures how far the three linearized constraints stay below zero.
RobinsonReport verify_robinson(const ProblemSpec& spec, const EllipticOperator& op,
                               const Field& y, const Field& u, double rho,
                               double tol_act = -1.0, const PdeOptions& options = {});

}  // namespace parakkt
