#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "nodal.hpp"
#include "parakkt/error.hpp"
#include "parakkt/optimize.hpp"

namespace parakkt {

namespace {

constexpr int kMaxUnknowns = 200;

bool close(double x, double y) { return std::abs(x - y) <= 1e-9 * (1.0 + std::abs(x) + std::abs(y)); }

// Rejects anything that does not reduce to a convex QP: f must be linear with a
// constant slope, g affine in y, L quadratic with a positive semidefinite
// nodal Hessian and L_uu > 0.
void require_convex(const ProblemSpec& spec, const Mesh& mesh) {
  const double kappa = spec.f.d1(0.0);
  for (double y : {-2.0, -0.5, 0.3, 1.7}) {
    if (!close(spec.f.value(y), kappa * y) || !close(spec.f.d1(y), kappa) ||
        spec.f.d2(y) != 0.0) {
      throw InvalidArgument("oracle needs a linear nonlinearity f(y) = c y");
    }
  }
  for (int n = 1; n <= mesh.nt(); ++n) {
    for (int k = 0; k < mesh.num_nodes(); ++k) {
      const Point p = mesh.point(n, k);
      const double g0 = spec.g.value(p, 0.0), gy = spec.g.dy(p, 0.0);
      const double lyy = spec.cost.dyy(p, 0, 0), lyu = spec.cost.dyu(p, 0, 0);
      const double luu = spec.cost.duu(p, 0, 0);
      const double ly0 = spec.cost.dy(p, 0, 0), lu0 = spec.cost.du(p, 0, 0);
      for (double y : {-1.3, 0.8}) {
        for (double u : {-0.7, 1.1}) {
          if (!close(spec.g.value(p, y), g0 + gy * y) || spec.g.dyy(p, y) != 0.0) {
            throw InvalidArgument("oracle needs g affine in y");
          }
          if (!close(spec.cost.dy(p, y, u), ly0 + lyy * y + lyu * u) ||
              !close(spec.cost.du(p, y, u), lu0 + lyu * y + luu * u) ||
              !close(spec.cost.dyy(p, y, u), lyy) || !close(spec.cost.duu(p, y, u), luu)) {
            throw InvalidArgument("oracle needs a quadratic running cost");
          }
        }
      }
      if (!(luu > 0.0) || lyy < 0.0 || lyy * luu < lyu * lyu) {
        throw InvalidArgument("oracle needs a convex running cost with L_uu > 0");
      }
    }
  }
}

}  // namespace

OracleResult brute_force_oracle(const ProblemSpec& spec, const EllipticOperator& op) {
  const Mesh& mesh = op.mesh();
  validate_problem(spec, mesh);
  const int nn = mesh.num_nodes();
  const int nt = mesh.nt();
  const int N = nn * nt;
  if (N > kMaxUnknowns) throw InvalidArgument("oracle is limited to 200 control unknowns");
  require_convex(spec, mesh);

  const double dt = mesh.dt();
  const double kappa = spec.f.d1(0.0);

  // Space-time system: (I + dt(A + kappa)) y^n - y^{n-1} = dt u^n. With
  // R = (I + dt(A + kappa))^{-1}: y^n = sum_{m<=n} dt R^{n-m+1} u^m + R^n y0.
  Eigen::MatrixXd step = Eigen::MatrixXd::Identity(nn, nn) +
                         dt * Eigen::MatrixXd(op.matrix()) +
                         dt * kappa * Eigen::MatrixXd::Identity(nn, nn);
  const Eigen::MatrixXd R = step.inverse();
  std::vector<Eigen::MatrixXd> powers(nt + 1);
  powers[0] = Eigen::MatrixXd::Identity(nn, nn);
  for (int p = 1; p <= nt; ++p) powers[p] = R * powers[p - 1];

  OracleResult out;
  out.S = Eigen::MatrixXd::Zero(N, N);
  out.s0 = Eigen::VectorXd::Zero(N);
  Eigen::VectorXd y0(nn);
  for (int k = 0; k < nn; ++k) y0[k] = spec.y0(mesh.coords(k));
  for (int n = 1; n <= nt; ++n) {
    out.s0.segment((n - 1) * nn, nn) = powers[n] * y0;
    for (int m = 1; m <= n; ++m) {
      out.S.block((n - 1) * nn, (m - 1) * nn, nn, nn) = dt * powers[n - m + 1];
    }
  }
  const Eigen::MatrixXd& S = out.S;

  // Quadratic data per unknown (level n = i / nn + 1, node k = i % nn).
  Eigen::VectorXd mass(N), lyy(N), lyu(N), luu(N), ly0(N), lu0(N), g0(N), gy(N);
  for (int i = 0; i < N; ++i) {
    const int n = i / nn + 1, k = i % nn;
    const Point p = mesh.point(n, k);
    mass[i] = dt * mesh.weight(k);
    lyy[i] = spec.cost.dyy(p, 0, 0);
    lyu[i] = spec.cost.dyu(p, 0, 0);
    luu[i] = spec.cost.duu(p, 0, 0);
    ly0[i] = spec.cost.dy(p, 0, 0);
    lu0[i] = spec.cost.du(p, 0, 0);
    g0[i] = spec.g.value(p, 0.0);
    gy[i] = spec.g.dy(p, 0.0);
  }
  const Eigen::VectorXd dyy = mass.cwiseProduct(lyy);
  const Eigen::VectorXd dyu = mass.cwiseProduct(lyu);
  Eigen::MatrixXd H = S.transpose() * dyy.asDiagonal() * S;
  H += S.transpose() * dyu.asDiagonal();
  H += dyu.asDiagonal() * S;
  H.diagonal() += mass.cwiseProduct(luu);
  H = 0.5 * (H + H.transpose());
  const Eigen::VectorXd q = S.transpose() * (dyy.cwiseProduct(out.s0) + mass.cwiseProduct(ly0)) +
                            dyu.cwiseProduct(out.s0) + mass.cwiseProduct(lu0);
  out.hessian = H;

  // Constraints C x <= d: rows [0, N) lower bounds, [N, 2N) upper bounds,
  // [2N, 3N) mixed constraint g0 + gy (S x + s0) + eps x <= 0.
  const int m = 3 * N;
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(m, N);
  Eigen::VectorXd d(m);
  for (int i = 0; i < N; ++i) {
    C(i, i) = -1.0;
    d[i] = -spec.a;
    C(N + i, i) = 1.0;
    d[N + i] = spec.b;
  }
  C.bottomRows(N) = gy.asDiagonal() * S;
  C.bottomRows(N).diagonal().array() += spec.eps;
  d.tail(N) = -(g0 + gy.cwiseProduct(out.s0));

  Eigen::VectorXd x = Eigen::VectorXd::Constant(N, spec.a);
  const double feas_tol = 1e-11 * (1.0 + d.cwiseAbs().maxCoeff());
  if (((C * x - d).array() > feas_tol).any()) {
    throw InvalidArgument("oracle needs u = a to satisfy the mixed constraint");
  }

  std::vector<int> work;
  for (int i = 0; i < N; ++i) work.push_back(i);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(m);
  const double scale = 1.0 + H.cwiseAbs().maxCoeff();
  const int max_iterations = 20 * m;
  int it = 0;
  for (; it < max_iterations; ++it) {
    const int w = static_cast<int>(work.size());
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(N + w, N + w);
    K.topLeftCorner(N, N) = H;
    for (int j = 0; j < w; ++j) {
      K.block(0, N + j, N, 1) = C.row(work[j]).transpose();
      K.block(N + j, 0, 1, N) = C.row(work[j]);
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N + w);
    rhs.head(N) = -(H * x + q);
    const Eigen::VectorXd sol = K.fullPivLu().solve(rhs);
    const Eigen::VectorXd p = sol.head(N);

    if (p.cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + x.cwiseAbs().maxCoeff())) {
      x += p;
      int drop = -1;
      double most_negative = -1e-12 * scale;
      for (int j = 0; j < w; ++j) {
        if (sol[N + j] < most_negative) {
          most_negative = sol[N + j];
          drop = j;
        }
      }
      if (drop < 0) {
        mu.setZero();
        for (int j = 0; j < w; ++j) mu[work[j]] = std::max(0.0, sol[N + j]);
        break;
      }
      work.erase(work.begin() + drop);
      continue;
    }

    double alpha = 1.0;
    int blocking = -1;
    const Eigen::VectorXd cp = C * p;
    const Eigen::VectorXd slack = d - C * x;
    for (int r = 0; r < m; ++r) {
      if (std::find(work.begin(), work.end(), r) != work.end()) continue;
      if (cp[r] > 1e-14 * (1.0 + p.cwiseAbs().maxCoeff())) {
        const double t = std::max(0.0, slack[r]) / cp[r];
        if (t < alpha) {
          alpha = t;
          blocking = r;
        }
      }
    }
    x += alpha * p;
    if (blocking >= 0) work.push_back(blocking);
  }
  if (it >= max_iterations) throw InvalidArgument("oracle active-set method did not terminate");
  out.iterations = it;

  // Dense KKT residual: stationarity, primal feasibility, complementarity.
  const Eigen::VectorXd grad = H * x + q + C.transpose() * mu;
  const Eigen::VectorXd viol = (C * x - d).cwiseMax(0.0);
  const Eigen::VectorXd comp = mu.cwiseProduct(C * x - d);
  out.qp_residual = std::max({grad.cwiseAbs().maxCoeff(), viol.maxCoeff(), comp.cwiseAbs().maxCoeff()});

  // Back to nodal fields; discrete multipliers are densities w.r.t. dt*w.
  Solution& s = out.solution;
  s.u = Field::zeros(mesh);
  s.y = Field::zeros(mesh);
  s.e = Field::zeros(mesh);
  s.ehat = Field::zeros(mesh);
  s.phi = Field::zeros(mesh);
  const Eigen::VectorXd yq = S * x + out.s0;
  s.y.level(0) = y0;
  Eigen::VectorXd e(N), src(N);
  for (int i = 0; i < N; ++i) {
    const int n = i / nn + 1, k = i % nn;
    s.u(n, k) = x[i];
    s.y(n, k) = yq[i];
    e[i] = mu[2 * N + i] / mass[i];
    s.e(n, k) = e[i];
    s.ehat(n, k) = (mu[N + i] - mu[i]) / mass[i];
    src[i] = ly0[i] + lyy[i] * yq[i] + lyu[i] * x[i] + e[i] * gy[i];
  }
  // phi = -(S^T M (L_y + e g_y)) / M, the adjoint written with the dense map.
  const Eigen::VectorXd phi = -(S.transpose() * mass.cwiseProduct(src)).cwiseQuotient(mass);
  for (int i = 0; i < N; ++i) s.phi(i / nn + 1, i % nn) = phi[i];

  s.J = eval_objective(spec, mesh, s.y, s.u);
  s.sets = classify_active_sets(spec, mesh, s.y, s.u, default_tol_act(spec));
  s.kkt = kkt_residuals(spec, op, s.y, s.u, s.phi, s.e, s.ehat, s.sets);
  s.certified = s.kkt.certified;
  s.status = "oracle";
  return out;
}

}  // namespace parakkt
