#include "parakkt/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nodal.hpp"
#include "parakkt/error.hpp"

namespace parakkt {

using detail::nodal_q;

void OptimizeParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(std::string("optimizer parameter ") + what);
  };
  require(c0 > 0.0, "c0 must be positive");
  require(growth > 1.0, "growth must exceed 1");
  require(stall_factor > 1.0, "stall_factor must exceed 1");
  require(c_max >= c0, "c_max must be at least c0");
  require(damping > 0.0 && damping <= 1.0, "damping must lie in (0, 1]");
  require(inner_tol > 0.0, "inner_tol must be positive");
  require(stop_tol > 0.0, "stop_tol must be positive");
  require(kkt_tol > 0.0, "kkt_tol must be positive");
  require(max_outer >= 1, "max_outer must be at least 1");
  require(max_inner >= 1, "max_inner must be at least 1");
  require(armijo_sigma > 0.0 && armijo_sigma < 1.0, "armijo_sigma must lie in (0, 1)");
  require(backtrack > 0.0 && backtrack < 1.0, "backtrack must lie in (0, 1)");
  require(max_backtracks >= 1, "max_backtracks must be at least 1");
  require(armijo_slack >= 0.0, "armijo_slack must be nonnegative");
}

Field project_box(const Field& u, double a, double b) {
  Field p = u;
  p.values() = u.values().cwiseMax(a).cwiseMin(b);
  return p;
}

Field default_initial_control(const ProblemSpec& spec, const Mesh& mesh) {
  Field u = Field::constant(mesh, 0.5 * (spec.a + spec.b));
  u.level(0).setZero();
  return u;
}

double augmented_objective(const ProblemSpec& spec, const Mesh& mesh, const Field& y,
                           const Field& u, const Field& e) {
  return eval_objective(spec, mesh, y, u) +
         inner_q(mesh, e, mixed_constraint_values(spec, mesh, y, u));
}

namespace {

Field gradient_from_state(const ProblemSpec& spec, const EllipticOperator& op, const Field& y,
                          const Field& u, const Field& e, const PdeOptions& options) {
  const Mesh& mesh = op.mesh();
  const Field phi = solve_adjoint(spec, op, y, u, e, options);
  return nodal_q(mesh, "reduced gradient", [&](const Point& p, int n, int k) {
    return spec.cost.du(p, y(n, k), u(n, k)) - phi(n, k) + spec.eps * e(n, k);
  });
}

// One evaluation of the augmented Lagrangian merit
//   J(u) + 1/(2c) int (max(0, e + c h)^2 - e^2),  h = g(y) + eps u.
struct MeritPoint {
  Field u, y, h, e_shift;
  double J = 0.0;
  double merit = 0.0;
};

MeritPoint evaluate(const ProblemSpec& spec, const EllipticOperator& op, const Field& u,
                    const Field& e, double c, const PdeOptions& options) {
  const Mesh& mesh = op.mesh();
  MeritPoint m;
  m.u = u;
  m.y = solve_state(spec, op, u, options).y;
  m.J = eval_objective(spec, mesh, m.y, u);
  m.h = mixed_constraint_values(spec, mesh, m.y, u);
  m.e_shift = Field::zeros(mesh);
  m.e_shift.values() = (e.values() + c * m.h.values()).cwiseMax(0.0);
  m.e_shift.level(0).setZero();
  const double pen = inner_q(mesh, m.e_shift, m.e_shift) - inner_q(mesh, e, e);
  m.merit = m.J + pen / (2.0 * c);
  return m;
}

struct InnerResult {
  MeritPoint point;
  int iterations = 0;
  double pg = 0.0;
};

InnerResult minimize_merit(const ProblemSpec& spec, const EllipticOperator& op, const Field& u0,
                           const Field& e, double c, double& step, const OptimizeParams& prm) {
  const Mesh& mesh = op.mesh();
  InnerResult r;
  MeritPoint cur = evaluate(spec, op, u0, e, c, prm.pde);
  Field g = gradient_from_state(spec, op, cur.y, cur.u, cur.e_shift, prm.pde);
  for (int it = 0;; ++it) {
    const Field pg = cur.u - project_box(cur.u - g, spec.a, spec.b);
    r.pg = max_abs_q(pg);
    r.iterations = it;
    if (r.pg <= prm.inner_tol || it >= prm.max_inner) break;

    double s = step;
    bool accepted = false;
    MeritPoint trial;
    for (int bt = 0; bt < prm.max_backtracks; ++bt) {
      Field ut = project_box(cur.u - s * g, spec.a, spec.b);
      const Field du = cur.u - ut;
      const double d2 = inner_q(mesh, du, du);
      if (d2 == 0.0) break;
      trial = evaluate(spec, op, ut, e, c, prm.pde);
      const double slack = prm.armijo_slack * (1.0 + std::abs(cur.merit));
      if (trial.merit <= cur.merit - prm.armijo_sigma * d2 / s + slack) {
        accepted = true;
        break;
      }
      s *= prm.backtrack;
    }
    if (!accepted) break;

    Field g_new = gradient_from_state(spec, op, trial.y, trial.u, trial.e_shift, prm.pde);
    const Field du = trial.u - cur.u;
    const Field dg = g_new - g;
    const double sy = inner_q(mesh, du, dg);
    const double ss = inner_q(mesh, du, du);
    step = sy > 0.0 ? std::clamp(ss / sy, 1e-10, 1e10) : std::min(10.0 * s, 1e10);
    cur = std::move(trial);
    g = std::move(g_new);
  }
  r.point = std::move(cur);
  return r;
}

}  // namespace

Field reduced_gradient(const ProblemSpec& spec, const EllipticOperator& op, const Field& u,
                       const Field& e, const PdeOptions& options) {
  const Field y = solve_state(spec, op, u, options).y;
  return gradient_from_state(spec, op, y, u, e, options);
}

Solution certify_control(const ProblemSpec& spec, const EllipticOperator& op, const Field& u,
                         double kkt_tol, double tol_act, const PdeOptions& options) {
  const Mesh& mesh = op.mesh();
  require_matches(u, mesh, "control");
  if (tol_act < 0.0) tol_act = default_tol_act(spec);
  Solution s;
  s.u = u;
  s.u.level(0).setZero();
  s.y = solve_state(spec, op, s.u, options).y;
  s.J = eval_objective(spec, mesh, s.y, s.u);
  s.sets = classify_active_sets(spec, mesh, s.y, s.u, tol_act);
  CoupledAdjoint adj = solve_coupled_adjoint(spec, op, s.y, s.u, s.sets, options);
  s.phi = std::move(adj.phi);
  s.e = std::move(adj.multipliers.e);
  s.ehat = std::move(adj.multipliers.ehat);
  s.kkt = kkt_residuals(spec, op, s.y, s.u, s.phi, s.e, s.ehat, s.sets, kkt_tol);
  s.certified = s.kkt.certified;
  s.status = s.certified ? "certified" : "not certified";
  return s;
}

Solution solve_augmented_lagrangian(const ProblemSpec& spec, const EllipticOperator& op,
                                    const Field& u_init, const OptimizeParams& params) {
  params.validate();
  const Mesh& mesh = op.mesh();
  validate_problem(spec, mesh);
  require_matches(u_init, mesh, "initial control");

  Field u = project_box(u_init, spec.a, spec.b);
  u.level(0).setZero();
  Field e = Field::zeros(mesh);
  double c = params.c0;
  double step = 1.0;
  double feas_prev = std::numeric_limits<double>::infinity();

  Solution best;
  bool have_best = false;
  std::vector<HistoryEntry> history;
  for (int outer = 1; outer <= params.max_outer; ++outer) {
    const InnerResult inner = minimize_merit(spec, op, u, e, c, step, params);
    u = inner.point.u;
    const double feas = std::max(0.0, max_q(inner.point.h));

    Solution cand = certify_control(spec, op, u, params.kkt_tol, params.tol_act, params.pde);
    HistoryEntry h;
    h.outer = outer;
    h.inner_iterations = inner.iterations;
    h.J = cand.J;
    h.feasibility = feas;
    h.stationarity = cand.kkt.stationarity;
    h.max_residual = cand.kkt.max_residual();
    h.penalty = c;
    history.push_back(h);

    cand.outer_iterations = outer;
    const bool done = h.max_residual <= params.stop_tol;
    if (!have_best || h.max_residual <= best.kkt.max_residual() || done) {
      best = std::move(cand);
      have_best = true;
    }
    if (done) break;

    e.values() = (e.values() + params.damping * c * inner.point.h.values()).cwiseMax(0.0);
    e.level(0).setZero();
    if (feas > feas_prev / params.stall_factor) c = std::min(c * params.growth, params.c_max);
    feas_prev = feas;
  }
  best.history = std::move(history);
  if (best.kkt.max_residual() <= params.stop_tol) {
    best.status = best.certified ? "converged" : "converged, not certified";
  } else {
    best.status = best.certified ? "budget exhausted, certified" : "budget exhausted";
  }
  return best;
}

}  // namespace parakkt
