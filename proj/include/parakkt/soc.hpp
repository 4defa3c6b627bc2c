#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

#include "parakkt/field.hpp"
#include "parakkt/kkt.hpp"
#include "parakkt/optimize.hpp"

namespace parakkt {

struct CriticalDirection {
  Field v;  // control direction
  Field z;  // linearized response, zero initial data
  bool box_signs_enforced = false;    // v = 0 / sign rules on box-active nodes
  bool mixed_enforced = false;        // g_y z + eps v <= 0 on mask_0
  int tightened_nodes = 0;            // weakly active mixed nodes made tight
  double first_order = 0.0;           // int (L_y z + L_u v)
};

struct SocOptions {
  /// A node counts as strongly active when its multiplier exceeds this.
  double strong_tol = 1e-7;
  /// (c'1) accepted when int (L_y z + L_u v) <= soc_tol ||(z, v)||.
  double soc_tol = 1e-6;
  /// Pass threshold on the minimum normalized form.
  double soc_margin = 0.0;
  int max_attempt_factor = 5;
  int max_tightening_rounds = 20;
  PdeOptions pde;
};

/// int_Q (L_yy z^2 + 2 L_yu z v + L_uu v^2 + e g_yy z^2 + phi f''(y) z^2),
/// all coefficients evaluated at (y, u).
double quadratic_form(const ProblemSpec& spec, const Mesh& mesh, const Field& y, const Field& u,
                      const Field& phi, const Field& e, const Field& z, const Field& v);

/// Draws one direction of the critical cone at `sol`: random smooth plus
/// rough v, zero on strongly box-active nodes and sign-restricted on weakly
/// active ones, tight (g_y z + eps v = 0) on strongly mixed-active nodes;
/// weakly active mixed nodes that end up violating g_y z + eps v <= 0 are made
/// tight and the response is re-solved. Returns nothing when the direction
/// degenerates or fails the first-order filter.
std::optional<CriticalDirection> sample_critical_direction(const ProblemSpec& spec,
                                                           const EllipticOperator& op,
                                                           const Solution& sol,
                                                           std::uint64_t seed,
                                                           const SocOptions& options = {});

struct ConeCheck {
  bool c2 = false, c3 = false, c4 = false, c1 = false;
  double c2_residual = 0.0;  // linearized equation, max norm per unit measure
  double c3_violation = 0.0;
  double c4_violation = 0.0;
  double c1_value = 0.0;
  bool all() const { return c1 && c2 && c3 && c4; }
};

/// Independent re-verification of the cone conditions for a direction.
ConeCheck check_cone(const ProblemSpec& spec, const EllipticOperator& op, const Solution& sol,
                     const Field& z, const Field& v, const SocOptions& options = {});

struct SOCReport {
  int n_requested = 0;
  int n_accepted = 0;
  int n_attempts = 0;
  double min = 0.0;      // min of form / ||v||^2
  double median = 0.0;
  double max = 0.0;
  double lambda_min = 0.0;  // smallest sampled L_uu over the nodes
  bool low_confidence = false;
  bool pass = false;
  std::vector<double> values;  // per accepted sample, in draw order

  nlohmann::json to_json() const;
};

/// Samples `n_samples` cone directions (seeded per sample index) and reports
/// the distribution of the normalized second-order form.
SOCReport min_rayleigh(const ProblemSpec& spec, const EllipticOperator& op, const Solution& sol,
                       int n_samples, std::uint64_t seed, const SocOptions& options = {});

struct GrowthReport {
  int n_requested = 0;
  int n_feasible = 0;
  int n_tried = 0;
  double kappa = 0.0;               // min ratio over feasible perturbations
  std::vector<double> radii;
  std::vector<double> kappa_per_radius;
  std::vector<double> ratios;
  bool pass = false;

  nlohmann::json to_json() const;
};

/// Quadratic growth probe: u = P_box(u_bar + delta) with |delta| <= r,
/// pushed downward where the mixed constraint is nearly active; perturbations
/// that violate g + eps u <= max(0, max(g + eps u_bar)) are discarded.
/// Ratio (J(u) - J(u_bar)) / ||u - u_bar||^2.
GrowthReport growth_test(const ProblemSpec& spec, const EllipticOperator& op, const Solution& sol,
                         int n_perturb, const std::vector<double>& radii, std::uint64_t seed,
                         const SocOptions& options = {});

struct DenseConeBound {
  double min_eigenvalue = 0.0;  // min of v^T H v / v^T M v over the cone span
  int span_dimension = 0;
  int num_unknowns = 0;
  Eigen::MatrixXd hessian;      // reduced Hessian of the Lagrangian
};

/// Tiny grids only (at most 400 control unknowns): builds the reduced Hessian
/// of the Lagrangian column by column and minimizes its Rayleigh quotient over
/// the linear span of the sampled cone (v = 0 on strongly box-active nodes,
/// g_y z + eps v = 0 on strongly mixed-active nodes).
DenseConeBound dense_cone_bound(const ProblemSpec& spec, const EllipticOperator& op,
                                const Solution& sol, const SocOptions& options = {});

}  // namespace parakkt
