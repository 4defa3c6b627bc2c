#include "parakkt/pde.hpp"

#include <chrono>
#include <cmath>

#include "parakkt/error.hpp"
#include "parakkt/linalg.hpp"

namespace parakkt {

namespace {

void check_step_matrix(const StepOperator& m, int step) {
  const Eigen::VectorXd d = m.diagonal();
  const double dmin = d.minCoeff();
  if (!(dmin > 0.0)) {
    throw LinearSolverBreakdown("step matrix has a non-positive diagonal", step, dmin);
  }
}

void linear_step(const StepOperator& m, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                 const PdeOptions& opt, int step, int* cg_count) {
  const CgResult r = solve_pcg(m, b, x, opt.lin_tol, opt.cg_max_iterations);
  if (cg_count) *cg_count += r.iterations;
  if (r.breakdown) {
    throw LinearSolverBreakdown("CG breakdown (matrix not positive definite)", step,
                                m.diagonal().minCoeff());
  }
  if (!r.converged) {
    throw LinearSolverBreakdown("CG did not reach the linear tolerance", step,
                                m.diagonal().minCoeff());
  }
}

}  // namespace

StateSolution solve_state(const ProblemSpec& spec, const EllipticOperator& op, const Field& u,
                          const PdeOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  const Mesh& mesh = op.mesh();
  require_matches(u, mesh, "control");
  const int nn = mesh.num_nodes();
  const double dt = mesh.dt();
  const double tol = opt.newton_tol * dt;

  StateSolution out;
  out.y = Field::zeros(mesh);
  Field& y = out.y;
  for (int k = 0; k < nn; ++k) {
    y(0, k) = spec.y0(mesh.coords(k));
    if (!std::isfinite(y(0, k))) throw NonFiniteValue("initial datum y0", 0, k);
  }

  Eigen::VectorXd cur(nn), fval(nn), c(nn), res(nn), delta(nn), trial(nn), ay(nn);
  auto residual = [&](const Eigen::VectorXd& v, int n, Eigen::VectorXd& r) {
    for (int k = 0; k < nn; ++k) {
      fval[k] = spec.f.value(v[k]);
      if (!std::isfinite(fval[k])) throw NonFiniteValue("nonlinearity f", n, k);
    }
    ay.noalias() = op.matrix() * v;
    r = v + dt * (ay + fval) - y.level(n - 1) - dt * u.level(n);
    return r.lpNorm<Eigen::Infinity>();
  };

  for (int n = 1; n <= mesh.nt(); ++n) {
    if (!u.level(n).allFinite()) throw NonFiniteValue("control", n, -1);
    if (opt.newton_start == PdeOptions::NewtonStart::zero) {
      cur.setZero();
    } else {
      cur = y.level(n - 1);
    }
    double rnorm = residual(cur, n, res);
    int iterations = 0;
    int cg_total = 0;
    while (rnorm > tol) {
      if (iterations >= opt.newton_max_iterations) throw NewtonFailure(n, rnorm / dt, iterations);
      ++iterations;
      for (int k = 0; k < nn; ++k) c[k] = spec.f.d1(cur[k]);
      const StepOperator jac(op, dt, c);
      check_step_matrix(jac, n);
      delta.setZero();
      linear_step(jac, -res, delta, opt, n, &cg_total);

      double s = 1.0;
      bool accepted = false;
      for (int h = 0; h <= opt.max_halvings; ++h) {
        trial = cur + s * delta;
        Eigen::VectorXd trial_res(nn);
        const double tnorm = residual(trial, n, trial_res);
        if (tnorm < (1.0 - 1e-4 * s) * rnorm || tnorm <= tol) {
          cur = trial;
          res = trial_res;
          rnorm = tnorm;
          accepted = true;
          break;
        }
        s *= 0.5;
      }
      if (!accepted) throw NewtonFailure(n, rnorm / dt, iterations);
    }
    y.level(n) = cur;
    out.diagnostics.newton_iterations.push_back(iterations);
    out.diagnostics.max_residual.push_back(rnorm / dt);
    out.diagnostics.cg_iterations.push_back(cg_total);
  }
  out.diagnostics.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

Field solve_linearized(const EllipticOperator& op, const Field& c, const Field& rhs,
                       const Eigen::VectorXd& init, const PdeOptions& opt) {
  const Mesh& mesh = op.mesh();
  require_matches(c, mesh, "reaction coefficient");
  require_matches(rhs, mesh, "right-hand side");
  if (init.size() != mesh.num_nodes()) throw InvalidArgument("initial slice has wrong size");
  const double dt = mesh.dt();
  Field z = Field::zeros(mesh);
  z.level(0) = init;
  Eigen::VectorXd cn(mesh.num_nodes()), b(mesh.num_nodes()), x(mesh.num_nodes());
  for (int n = 1; n <= mesh.nt(); ++n) {
    cn = c.level(n);
    const StepOperator m(op, dt, cn);
    check_step_matrix(m, n);
    b = z.level(n - 1) + dt * rhs.level(n);
    x = z.level(n - 1);
    linear_step(m, b, x, opt, n, nullptr);
    z.level(n) = x;
  }
  return z;
}

Field solve_backward(const EllipticOperator& op, const Field& c, const Field& source,
                     const PdeOptions& opt) {
  const Mesh& mesh = op.mesh();
  require_matches(c, mesh, "reaction coefficient");
  require_matches(source, mesh, "source");
  const double dt = mesh.dt();
  const Eigen::VectorXd& w = mesh.weights();
  Field phi = Field::zeros(mesh);
  Eigen::VectorXd psi_next = Eigen::VectorXd::Zero(mesh.num_nodes());
  Eigen::VectorXd cn(mesh.num_nodes()), b(mesh.num_nodes()), x(mesh.num_nodes());
  for (int n = mesh.nt(); n >= 1; --n) {
    cn = c.level(n);
    const StepOperator m(op, dt, cn);
    check_step_matrix(m, n);
    b = psi_next + dt * w.cwiseProduct(source.level(n));
    x = psi_next;
    linear_step(m, b, x, opt, n, nullptr);
    phi.level(n) = x.cwiseQuotient(w);
    psi_next = x;
  }
  return phi;
}

Field reaction_coefficient(const ProblemSpec& spec, const Mesh& mesh, const Field& y) {
  require_matches(y, mesh, "state");
  Field c = Field::zeros(mesh);
  for (int n = 1; n <= mesh.nt(); ++n) {
    for (int k = 0; k < mesh.num_nodes(); ++k) {
      c(n, k) = spec.f.d1(y(n, k));
      if (!std::isfinite(c(n, k))) throw NonFiniteValue("f'", n, k);
    }
  }
  return c;
}

Field solve_adjoint(const ProblemSpec& spec, const EllipticOperator& op, const Field& y,
                    const Field& u, const Field& e, const PdeOptions& opt) {
  const Mesh& mesh = op.mesh();
  require_matches(u, mesh, "control");
  require_matches(e, mesh, "multiplier e");
  const Field c = reaction_coefficient(spec, mesh, y);
  Field source = Field::zeros(mesh);
  for (int n = 1; n <= mesh.nt(); ++n) {
    for (int k = 0; k < mesh.num_nodes(); ++k) {
      const Point p = mesh.point(n, k);
      double s = -spec.cost.dy(p, y(n, k), u(n, k));
      if (e(n, k) != 0.0) s -= e(n, k) * spec.g.dy(p, y(n, k));
      if (!std::isfinite(s)) throw NonFiniteValue("adjoint source", n, k);
      source(n, k) = s;
    }
  }
  return solve_backward(op, c, source, opt);
}

AprioriRatios apriori_check(const Mesh& mesh, const Field& y, const Field& u, int p) {
  require_matches(y, mesh, "state");
  require_matches(u, mesh, "control");
  AprioriRatios r;
  r.p = p;
  const double dt = mesh.dt();
  const Eigen::VectorXd& w = mesh.weights();

  r.y_linf = y.values().cwiseAbs().maxCoeff();
  r.y0_linf = y.level(0).cwiseAbs().maxCoeff();
  double lp = 0.0, l2 = 0.0, yt = 0.0;
  for (int n = 1; n <= mesh.nt(); ++n) {
    const double un2 = (u.level(n).array().square() * w.array()).sum();
    lp += dt * std::pow(un2, 0.5 * p);
    l2 += dt * un2;
    const Eigen::VectorXd diff = (y.level(n) - y.level(n - 1)) / dt;
    yt += dt * (diff.array().square() * w.array()).sum();
  }
  r.u_lp_l2 = std::pow(lp, 1.0 / p);
  r.u_l2 = std::sqrt(l2);
  r.yt_l2 = std::sqrt(yt);

  // Discrete H^1_0 seminorm of y0 over all grid edges, boundary zeros included.
  const int nx = mesh.nx();
  const int ny = mesh.ny();
  auto y0_at = [&](int i, int j) {
    if (i < 0 || i >= nx || j < 0 || j >= ny) return 0.0;
    return y(0, mesh.index(i, j));
  };
  double h1 = 0.0;
  const double cell_x = mesh.dim() == 2 ? mesh.hx() * mesh.hy() : mesh.hx();
  for (int j = 0; j < ny; ++j) {
    for (int i = -1; i < nx; ++i) {
      const double d = (y0_at(i + 1, j) - y0_at(i, j)) / mesh.hx();
      h1 += d * d * cell_x;
    }
  }
  if (mesh.dim() == 2) {
    for (int i = 0; i < nx; ++i) {
      for (int j = -1; j < ny; ++j) {
        const double d = (y0_at(i, j + 1) - y0_at(i, j)) / mesh.hy();
        h1 += d * d * mesh.hx() * mesh.hy();
      }
    }
  }
  r.y0_h1 = std::sqrt(h1);

  r.linf_ratio = r.y_linf == 0.0 ? 0.0 : r.y_linf / (r.u_lp_l2 + r.y0_linf);
  r.dt_ratio = r.yt_l2 == 0.0 ? 0.0 : r.yt_l2 / (r.u_l2 + r.y0_linf + r.y0_h1);
  return r;
}

}  // namespace parakkt
