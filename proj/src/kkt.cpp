#include "parakkt/kkt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nodal.hpp"
#include "parakkt/error.hpp"

namespace parakkt {

using detail::flat;
using detail::nodal_q;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Mask empty_mask(const Mesh& mesh) {
  return Mask(static_cast<std::size_t>(mesh.num_levels()) * mesh.num_nodes(), 0);
}

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

int ActiveSets::degenerate_count() const {
  int c = 0;
  for (std::size_t i = 0; i < mask_b.size(); ++i) c += (mask_b[i] && mask_0[i]) ? 1 : 0;
  return c;
}

double default_tol_act(const ProblemSpec& spec) { return 1e-8 * (spec.b - spec.a); }

int count(const Mask& m) {
  int c = 0;
  for (auto v : m) c += v ? 1 : 0;
  return c;
}

double region_measure(const Mesh& mesh, const Mask& m) {
  double s = 0.0;
  for (int n = 1; n <= mesh.nt(); ++n) {
    for (int k = 0; k < mesh.num_nodes(); ++k) {
      if (m[flat(mesh, n, k)]) s += mesh.weight(k);
    }
  }
  return s * mesh.dt();
}

Field mixed_constraint_values(const ProblemSpec& spec, const Mesh& mesh, const Field& y,
                              const Field& u) {
  require_matches(y, mesh, "state");
  require_matches(u, mesh, "control");
  return nodal_q(mesh, "g + eps u", [&](const Point& p, int n, int k) {
    return spec.g.value(p, y(n, k)) + spec.eps * u(n, k);
  });
}

ActiveSets classify_active_sets(const ProblemSpec& spec, const Mesh& mesh, const Field& y,
                                const Field& u, double tol_act) {
  if (!(tol_act >= 0.0)) throw InvalidArgument("tol_act must be nonnegative");
  const Field h = mixed_constraint_values(spec, mesh, y, u);
  ActiveSets s;
  s.tol_act = tol_act;
  s.mask_a = s.mask_b = s.mask_ab = s.mask_0 = empty_mask(mesh);
  for (int n = 1; n <= mesh.nt(); ++n) {
    for (int k = 0; k < mesh.num_nodes(); ++k) {
      const std::size_t i = flat(mesh, n, k);
      if (std::abs(u(n, k) - spec.a) <= tol_act) {
        s.mask_a[i] = 1;
      } else if (std::abs(u(n, k) - spec.b) <= tol_act) {
        s.mask_b[i] = 1;
      } else {
        s.mask_ab[i] = 1;
      }
      if (std::abs(h(n, k)) <= tol_act) s.mask_0[i] = 1;
    }
  }
  return s;
}

SeparationMargins check_separation(const ProblemSpec& spec, const Mesh& mesh, const Field& y,
                                   const Field& u, const Mask* mask_b) {
  require_matches(y, mesh, "state");
  require_matches(u, mesh, "control");
  SeparationMargins m;
  double worst = -kInf;
  double worst_b = -kInf;
  for (int n = 1; n <= mesh.nt(); ++n) {
    for (int k = 0; k < mesh.num_nodes(); ++k) {
      const double g = spec.g.value(mesh.point(n, k), y(n, k));
      const double v = spec.a - u(n, k) + spec.eps * u(n, k) + g;
      if (v > worst) {
        worst = v;
        m.worst_level = n;
        m.worst_node = k;
      }
      if (mask_b && (*mask_b)[flat(mesh, n, k)]) worst_b = std::max(worst_b, g + spec.eps * spec.b);
    }
  }
  m.gamma = -worst;
  m.gamma_b = -worst_b;
  return m;
}

Multipliers recover_multipliers(const ProblemSpec& spec, const Mesh& mesh, const Field& y,
                                const Field& u, const Field& phi, const ActiveSets& sets) {
  require_matches(phi, mesh, "adjoint");
  const Field lu = nodal_q(mesh, "L_u", [&](const Point& p, int n, int k) {
    return spec.cost.du(p, y(n, k), u(n, k));
  });
  Multipliers m{Field::zeros(mesh), Field::zeros(mesh)};
  for (int n = 1; n <= mesh.nt(); ++n) {
    for (int k = 0; k < mesh.num_nodes(); ++k) {
      const std::size_t i = flat(mesh, n, k);
      const double zeta = phi(n, k) - lu(n, k);
      if (sets.mask_a[i]) {
        m.ehat(n, k) = zeta;
      } else if (sets.mask_b[i]) {
        if (sets.mask_0[i]) {
          m.e(n, k) = std::max(zeta, 0.0) / spec.eps;
          m.ehat(n, k) = zeta - spec.eps * m.e(n, k);
        } else {
          m.ehat(n, k) = zeta;
        }
      } else if (sets.mask_0[i]) {
        m.e(n, k) = zeta / spec.eps;
      }
    }
  }
  return m;
}

CoupledAdjoint solve_coupled_adjoint(const ProblemSpec& spec, const EllipticOperator& op,
                                     const Field& y, const Field& u, const ActiveSets& sets,
                                     const PdeOptions& options) {
  const Mesh& mesh = op.mesh();
  require_matches(y, mesh, "state");
  require_matches(u, mesh, "control");
  const Field fp = reaction_coefficient(spec, mesh, y);
  const Field ly = nodal_q(mesh, "L_y", [&](const Point& p, int n, int k) {
    return spec.cost.dy(p, y(n, k), u(n, k));
  });
  const Field lu = nodal_q(mesh, "L_u", [&](const Point& p, int n, int k) {
    return spec.cost.du(p, y(n, k), u(n, k));
  });
  const Field gy = nodal_q(mesh, "g_y", [&](const Point& p, int n, int k) {
    return spec.g.dy(p, y(n, k));
  });

  Field c = fp;
  Field base = Field::zeros(mesh);
  for (int n = 1; n <= mesh.nt(); ++n) {
    for (int k = 0; k < mesh.num_nodes(); ++k) {
      const std::size_t i = flat(mesh, n, k);
      base(n, k) = -ly(n, k);
      if (sets.mask_ab[i] && sets.mask_0[i]) {
        c(n, k) += gy(n, k) / spec.eps;
        base(n, k) += gy(n, k) * lu(n, k) / spec.eps;
      }
    }
  }

  const bool degenerate = sets.degenerate_count() > 0;
  Field e_lag = Field::zeros(mesh);
  CoupledAdjoint out;
  for (int it = 1; it <= 50; ++it) {
    Field source = base;
    if (degenerate) {
      for (int n = 1; n <= mesh.nt(); ++n) {
        for (int k = 0; k < mesh.num_nodes(); ++k) source(n, k) -= e_lag(n, k) * gy(n, k);
      }
    }
    out.phi = solve_backward(op, c, source, options);
    out.multipliers = recover_multipliers(spec, mesh, y, u, out.phi, sets);
    out.fixed_point_iterations = it;
    if (!degenerate) break;
    double change = 0.0;
    for (std::size_t i = 0; i < sets.mask_b.size(); ++i) {
      if (!(sets.mask_b[i] && sets.mask_0[i])) continue;
      const int n = static_cast<int>(i / mesh.num_nodes());
      const int k = static_cast<int>(i % mesh.num_nodes());
      change = std::max(change, std::abs(out.multipliers.e(n, k) - e_lag(n, k)));
      e_lag(n, k) = out.multipliers.e(n, k);
    }
    if (change <= 1e-14 * (1.0 + max_abs_q(e_lag))) break;
  }
  return out;
}

double KKTReport::max_residual() const {
  return std::max({stationarity, adjoint, complementarity, e_sign, ehat_sign_a, ehat_sign_b,
                   ehat_inactive, feasibility, box_violation});
}

nlohmann::json KKTReport::to_json() const {
  nlohmann::json j;
  j["stationarity"] = number(stationarity);
  j["adjoint"] = number(adjoint);
  j["complementarity"] = number(complementarity);
  j["e_sign"] = number(e_sign);
  j["ehat_sign_a"] = number(ehat_sign_a);
  j["ehat_sign_b"] = number(ehat_sign_b);
  j["ehat_inactive"] = number(ehat_inactive);
  j["feasibility"] = number(feasibility);
  j["box_violation"] = number(box_violation);
  j["gamma"] = number(gamma);
  j["gamma_b"] = number(gamma_b);
  j["measure_a"] = number(measure_a);
  j["measure_b"] = number(measure_b);
  j["measure_ab"] = number(measure_ab);
  j["measure_0"] = number(measure_0);
  j["degenerate_nodes"] = degenerate_nodes;
  j["kkt_tol"] = kkt_tol;
  j["max_residual"] = number(max_residual());
  j["certified"] = certified;
  return j;
}

KKTReport kkt_residuals(const ProblemSpec& spec, const EllipticOperator& op, const Field& y,
                        const Field& u, const Field& phi, const Field& e, const Field& ehat,
                        const ActiveSets& sets, double kkt_tol) {
  const Mesh& mesh = op.mesh();
  require_matches(phi, mesh, "adjoint");
  require_matches(e, mesh, "multiplier e");
  require_matches(ehat, mesh, "multiplier ehat");
  KKTReport r;
  r.kkt_tol = kkt_tol;
  const Field h = mixed_constraint_values(spec, mesh, y, u);
  const int nn = mesh.num_nodes();
  const double dt = mesh.dt();
  const Eigen::VectorXd& w = mesh.weights();

  for (int n = 1; n <= mesh.nt(); ++n) {
    for (int k = 0; k < nn; ++k) {
      const std::size_t i = flat(mesh, n, k);
      const Point p = mesh.point(n, k);
      const double lu = spec.cost.du(p, y(n, k), u(n, k));
      r.stationarity =
          std::max(r.stationarity, std::abs(lu - phi(n, k) + spec.eps * e(n, k) + ehat(n, k)));
      r.complementarity = std::max(r.complementarity, std::abs(e(n, k) * h(n, k)));
      r.e_sign = std::max(r.e_sign, -e(n, k));
      if (sets.mask_a[i]) r.ehat_sign_a = std::max(r.ehat_sign_a, ehat(n, k));
      if (sets.mask_b[i]) r.ehat_sign_b = std::max(r.ehat_sign_b, -ehat(n, k));
      if (sets.mask_ab[i]) r.ehat_inactive = std::max(r.ehat_inactive, std::abs(ehat(n, k)));
      r.feasibility = std::max(r.feasibility, h(n, k));
      r.box_violation = std::max({r.box_violation, spec.a - u(n, k), u(n, k) - spec.b});
    }
  }

  // Discrete adjoint equation with psi = W phi, psi^{nt+1} = 0:
  // (I + dt (A + f'(y))) psi^n - psi^{n+1} + dt W (L_y + e g_y) = 0.
  Eigen::VectorXd psi(nn), psi_next = Eigen::VectorXd::Zero(nn), res(nn);
  for (int n = mesh.nt(); n >= 1; --n) {
    psi = w.cwiseProduct(phi.level(n));
    res = psi + dt * (op.apply(psi)) - psi_next;
    for (int k = 0; k < nn; ++k) {
      const Point p = mesh.point(n, k);
      const double src = spec.cost.dy(p, y(n, k), u(n, k)) + e(n, k) * spec.g.dy(p, y(n, k));
      res[k] += dt * (spec.f.d1(y(n, k)) * psi[k] + w[k] * src);
      r.adjoint = std::max(r.adjoint, std::abs(res[k]) / (dt * w[k]));
    }
    psi_next = psi;
  }

  const SeparationMargins sep = check_separation(spec, mesh, y, u, &sets.mask_b);
  r.gamma = sep.gamma;
  r.gamma_b = sep.gamma_b;
  r.measure_a = region_measure(mesh, sets.mask_a);
  r.measure_b = region_measure(mesh, sets.mask_b);
  r.measure_ab = region_measure(mesh, sets.mask_ab);
  r.measure_0 = region_measure(mesh, sets.mask_0);
  r.degenerate_nodes = sets.degenerate_count();
  r.certified = std::isfinite(r.max_residual()) && r.max_residual() <= kkt_tol;
  return r;
}

nlohmann::json RobinsonReport::to_json() const {
  nlohmann::json j;
  j["rho"] = rho;
  j["c2"] = number(c2);
  j["gamma"] = number(gamma);
  j["margin_upper"] = number(margin[0]);
  j["margin_lower"] = number(margin[1]);
  j["margin_mixed"] = number(margin[2]);
  j["delta"] = number(delta);
  j["violated"] = violated;
  j["worst_level"] = worst_level;
  j["worst_node"] = worst_node;
  j["size_q_a"] = size_q_a;
  j["size_q_rho"] = size_q_rho;
  j["success"] = success;
  j["message"] = message;
  return j;
}

RobinsonReport verify_robinson(const ProblemSpec& spec, const EllipticOperator& op,
                               const Field& y, const Field& u, double rho, double tol_act,
                               const PdeOptions& options) {
  const Mesh& mesh = op.mesh();
  require_matches(y, mesh, "state");
  require_matches(u, mesh, "control");
  if (!(rho > 0.0) || !(rho < 1.0)) throw InvalidArgument("rho must lie in (0, 1)");
  if (tol_act < 0.0) tol_act = default_tol_act(spec);

  RobinsonReport r;
  r.rho = rho;
  r.gamma = check_separation(spec, mesh, y, u).gamma;

  const Field fp = reaction_coefficient(spec, mesh, y);
  const Field alpha = nodal_q(mesh, "g_y", [&](const Point& p, int n, int k) {
    return spec.g.dy(p, y(n, k)) / spec.eps;
  });
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(mesh.num_nodes());

  const Field z_u = solve_linearized(op, fp, u, zero, options);
  Field w_rho = Field::zeros(mesh);
  for (int n = 1; n <= mesh.nt(); ++n) {
    w_rho.level(n) = u.level(n).array() - rho + alpha.level(n).array() * z_u.level(n).array();
  }
  const Field xi = solve_linearized(op, fp + alpha, w_rho, zero, options);
  Field u_rho = Field::zeros(mesh);
  for (int n = 1; n <= mesh.nt(); ++n) {
    u_rho.level(n) = w_rho.level(n) - alpha.level(n).cwiseProduct(xi.level(n));
  }
  r.c2 = max_abs_q(u_rho - u) / rho;

  Field uhat = u_rho;
  for (int n = 1; n <= mesh.nt(); ++n) {
    for (int k = 0; k < mesh.num_nodes(); ++k) {
      if (std::abs(u(n, k) - spec.a) <= tol_act) {
        uhat(n, k) = spec.a + rho;
        ++r.size_q_a;
      } else if (u(n, k) <= spec.a + 2.0 * r.c2 * rho) {
        uhat(n, k) = u(n, k) + rho;
        ++r.size_q_rho;
      }
    }
  }
  const Field z_hat = solve_linearized(op, fp, uhat, zero, options);

  double worst[3] = {-kInf, -kInf, -kInf};
  int where[3][2] = {{0, 0}, {0, 0}, {0, 0}};
  for (int n = 1; n <= mesh.nt(); ++n) {
    for (int k = 0; k < mesh.num_nodes(); ++k) {
      const Point p = mesh.point(n, k);
      const double ut = uhat(n, k) - u(n, k);
      const double yt = z_hat(n, k) - z_u(n, k);
      const double lhs[3] = {
          u(n, k) - spec.b + ut,
          spec.a - u(n, k) - ut,
          spec.g.value(p, y(n, k)) + spec.eps * u(n, k) + spec.g.dy(p, y(n, k)) * yt +
              spec.eps * ut,
      };
      for (int q = 0; q < 3; ++q) {
        if (lhs[q] > worst[q]) {
          worst[q] = lhs[q];
          where[q][0] = n;
          where[q][1] = k;
        }
      }
    }
  }
  int q_min = 0;
  for (int q = 0; q < 3; ++q) {
    r.margin[q] = -worst[q];
    if (r.margin[q] < r.margin[q_min]) q_min = q;
  }
  r.delta = r.margin[q_min];
  r.worst_level = where[q_min][0];
  r.worst_node = where[q_min][1];
  r.success = r.delta > 0.0;
  if (r.success) {
    r.message = "interior direction found";
  } else {
    r.violated = q_min + 1;
    r.message = "inequality " + std::to_string(r.violated) +
                " not strictly satisfied; try a smaller rho";
    if (!(r.gamma > 0.0)) r.message += " (separation margin is not positive)";
  }
  return r;
}

}  // namespace parakkt
