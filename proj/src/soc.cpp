#include "parakkt/soc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "nodal.hpp"
#include "parakkt/error.hpp"

namespace parakkt {

using detail::flat;
using detail::nodal_q;

namespace {

enum class NodeKind : std::uint8_t { free, strong_box, weak_a, weak_b, strong_mixed, weak_mixed };

std::vector<NodeKind> node_kinds(const Mesh& mesh, const Solution& sol, double tol) {
  std::vector<NodeKind> kind(static_cast<std::size_t>(mesh.num_levels()) * mesh.num_nodes(),
                             NodeKind::free);
  const ActiveSets& s = sol.sets;
  for (int n = 1; n <= mesh.nt(); ++n) {
    for (int k = 0; k < mesh.num_nodes(); ++k) {
      const std::size_t i = flat(mesh, n, k);
      const bool box = s.mask_a[i] || s.mask_b[i];
      if (box && std::abs(sol.ehat(n, k)) > tol) {
        kind[i] = NodeKind::strong_box;
      } else if (s.mask_0[i] && !box && sol.e(n, k) > tol) {
        kind[i] = NodeKind::strong_mixed;
      } else if (s.mask_0[i]) {
        kind[i] = NodeKind::weak_mixed;
      } else if (s.mask_a[i]) {
        kind[i] = NodeKind::weak_a;
      } else if (s.mask_b[i]) {
        kind[i] = NodeKind::weak_b;
      }
    }
  }
  return kind;
}

// Weak mixed nodes can also sit on a box bound; their box sign still applies.
void apply_box_signs(const Mesh& mesh, const Solution& sol, const std::vector<NodeKind>& kind,
                     Field& v) {
  for (int n = 1; n <= mesh.nt(); ++n) {
    for (int k = 0; k < mesh.num_nodes(); ++k) {
      const std::size_t i = flat(mesh, n, k);
      if (kind[i] == NodeKind::strong_box) {
        v(n, k) = 0.0;
      } else if (sol.sets.mask_a[i]) {
        v(n, k) = std::abs(v(n, k));
      } else if (sol.sets.mask_b[i]) {
        v(n, k) = -std::abs(v(n, k));
      }
    }
  }
}

Field random_direction(const Mesh& mesh, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  const double pi = std::numbers::pi;
  double coef[3][3][3];
  for (auto& a : coef) {
    for (auto& b : a) {
      for (auto& c : b) c = normal(rng);
    }
  }
  const double rough = 0.5;
  Field v = Field::zeros(mesh);
  for (int n = 1; n <= mesh.nt(); ++n) {
    const double t = mesh.time(n) / mesh.T();
    for (int k = 0; k < mesh.num_nodes(); ++k) {
      const auto x = mesh.coords(k);
      double s = 0.0;
      for (int i = 0; i < 3; ++i) {
        const double sx = std::sin((i + 1) * pi * x[0] / mesh.lx());
        for (int j = 0; j < (mesh.dim() == 2 ? 3 : 1); ++j) {
          const double sy = mesh.dim() == 2 ? std::sin((j + 1) * pi * x[1] / mesh.ly()) : 1.0;
          for (int l = 0; l < 3; ++l) s += coef[i][j][l] * sx * sy * std::cos(l * pi * t);
        }
      }
      v(n, k) = s + rough * normal(rng);
    }
  }
  return v;
}

}  // namespace

double quadratic_form(const ProblemSpec& spec, const Mesh& mesh, const Field& y, const Field& u,
                      const Field& phi, const Field& e, const Field& z, const Field& v) {
  for (const Field* f : {&y, &u, &phi, &e, &z, &v}) require_matches(*f, mesh, "field");
  double s = 0.0;
  for (int n = 1; n <= mesh.nt(); ++n) {
    double level = 0.0;
    for (int k = 0; k < mesh.num_nodes(); ++k) {
      const Point p = mesh.point(n, k);
      const double yy = y(n, k), uu = u(n, k), zz = z(n, k), vv = v(n, k);
      const double q = spec.cost.dyy(p, yy, uu) * zz * zz +
                       2.0 * spec.cost.dyu(p, yy, uu) * zz * vv +
                       spec.cost.duu(p, yy, uu) * vv * vv +
                       e(n, k) * spec.g.dyy(p, yy) * zz * zz +
                       phi(n, k) * spec.f.d2(yy) * zz * zz;
      level += mesh.weight(k) * q;
    }
    s += level;
  }
  return s * mesh.dt();
}

std::optional<CriticalDirection> sample_critical_direction(const ProblemSpec& spec,
                                                           const EllipticOperator& op,
                                                           const Solution& sol,
                                                           std::uint64_t seed,
                                                           const SocOptions& options) {
  const Mesh& mesh = op.mesh();
  const std::vector<NodeKind> kind = node_kinds(mesh, sol, options.strong_tol);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x5eedu};
  std::mt19937_64 rng(seq);

  CriticalDirection d;
  Field v_free = random_direction(mesh, rng);
  apply_box_signs(mesh, sol, kind, v_free);
  d.box_signs_enforced = true;

  const Field fp = reaction_coefficient(spec, mesh, sol.y);
  const Field gy = nodal_q(mesh, "g_y", [&](const Point& p, int n, int k) {
    return spec.g.dy(p, sol.y(n, k));
  });
  Mask tight(kind.size(), 0);
  for (std::size_t i = 0; i < kind.size(); ++i) tight[i] = kind[i] == NodeKind::strong_mixed;

  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(mesh.num_nodes());
  const double eps = spec.eps;
  for (int round = 0;; ++round) {
    // On tight nodes v = -g_y z / eps, folded into the reaction term.
    Field c = fp;
    Field rhs = v_free;
    for (int n = 1; n <= mesh.nt(); ++n) {
      for (int k = 0; k < mesh.num_nodes(); ++k) {
        if (tight[flat(mesh, n, k)]) {
          c(n, k) += gy(n, k) / eps;
          rhs(n, k) = 0.0;
        }
      }
    }
    d.z = solve_linearized(op, c, rhs, zero, options.pde);
    d.v = v_free;
    for (int n = 1; n <= mesh.nt(); ++n) {
      for (int k = 0; k < mesh.num_nodes(); ++k) {
        if (tight[flat(mesh, n, k)]) d.v(n, k) = -gy(n, k) * d.z(n, k) / eps;
      }
    }
    const double scale = 1e-12 * (1.0 + max_abs_q(d.v));
    int added = 0;
    for (int n = 1; n <= mesh.nt(); ++n) {
      for (int k = 0; k < mesh.num_nodes(); ++k) {
        const std::size_t i = flat(mesh, n, k);
        if (kind[i] != NodeKind::weak_mixed || tight[i]) continue;
        if (gy(n, k) * d.z(n, k) + eps * d.v(n, k) > scale) {
          tight[i] = 1;
          ++added;
        }
      }
    }
    d.tightened_nodes += added;
    if (added == 0) break;
    if (round + 1 >= options.max_tightening_rounds) return std::nullopt;
  }
  d.mixed_enforced = true;

  const double norm = l2_q(mesh, d.v);
  if (!(norm > 1e-12)) return std::nullopt;
  d.v *= 1.0 / norm;
  d.z *= 1.0 / norm;

  const Field ly = nodal_q(mesh, "L_y", [&](const Point& p, int n, int k) {
    return spec.cost.dy(p, sol.y(n, k), sol.u(n, k));
  });
  const Field lu = nodal_q(mesh, "L_u", [&](const Point& p, int n, int k) {
    return spec.cost.du(p, sol.y(n, k), sol.u(n, k));
  });
  d.first_order = inner_q(mesh, ly, d.z) + inner_q(mesh, lu, d.v);
  const double zv = std::sqrt(inner_q(mesh, d.z, d.z) + 1.0);
  if (d.first_order > options.soc_tol * zv) return std::nullopt;
  return d;
}

ConeCheck check_cone(const ProblemSpec& spec, const EllipticOperator& op, const Solution& sol,
                     const Field& z, const Field& v, const SocOptions& options) {
  const Mesh& mesh = op.mesh();
  require_matches(z, mesh, "state direction");
  require_matches(v, mesh, "control direction");
  ConeCheck c;
  const double dt = mesh.dt();
  const double tol = 1e-9 * (1.0 + max_abs_q(v) + max_abs_q(z));

  c.c2_residual = z.level(0).cwiseAbs().maxCoeff();
  for (int n = 1; n <= mesh.nt(); ++n) {
    const Eigen::VectorXd az = op.apply(z.level(n));
    for (int k = 0; k < mesh.num_nodes(); ++k) {
      const double r = (z(n, k) - z(n - 1, k)) / dt + az[k] + spec.f.d1(sol.y(n, k)) * z(n, k) -
                       v(n, k);
      c.c2_residual = std::max(c.c2_residual, std::abs(r));
    }
  }
  c.c2 = c.c2_residual <= 1e-8 * (1.0 + max_abs_q(v));

  double ly_z = 0.0, lu_v = 0.0;
  for (int n = 1; n <= mesh.nt(); ++n) {
    for (int k = 0; k < mesh.num_nodes(); ++k) {
      const std::size_t i = flat(mesh, n, k);
      const Point p = mesh.point(n, k);
      if (sol.sets.mask_a[i]) c.c3_violation = std::max(c.c3_violation, -v(n, k));
      if (sol.sets.mask_b[i]) c.c3_violation = std::max(c.c3_violation, v(n, k));
      if (sol.sets.mask_0[i]) {
        c.c4_violation =
            std::max(c.c4_violation, spec.g.dy(p, sol.y(n, k)) * z(n, k) + spec.eps * v(n, k));
      }
      const double w = dt * mesh.weight(k);
      ly_z += w * spec.cost.dy(p, sol.y(n, k), sol.u(n, k)) * z(n, k);
      lu_v += w * spec.cost.du(p, sol.y(n, k), sol.u(n, k)) * v(n, k);
    }
  }
  c.c3 = c.c3_violation <= tol;
  c.c4 = c.c4_violation <= tol;
  c.c1_value = ly_z + lu_v;
  c.c1 = c.c1_value <= options.soc_tol * std::sqrt(std::pow(l2_q(mesh, z), 2) +
                                                   std::pow(l2_q(mesh, v), 2));
  return c;
}

nlohmann::json SOCReport::to_json() const {
  nlohmann::json j;
  j["n_requested"] = n_requested;
  j["n_accepted"] = n_accepted;
  j["n_attempts"] = n_attempts;
  j["min"] = min;
  j["median"] = median;
  j["max"] = max;
  j["lambda_min"] = lambda_min;
  j["low_confidence"] = low_confidence;
  j["pass"] = pass;
  return j;
}

SOCReport min_rayleigh(const ProblemSpec& spec, const EllipticOperator& op, const Solution& sol,
                       int n_samples, std::uint64_t seed, const SocOptions& options) {
  if (n_samples < 1) throw InvalidArgument("n_samples must be positive");
  const Mesh& mesh = op.mesh();
  SOCReport r;
  r.n_requested = n_samples;
  const int max_attempts = std::max(n_samples, n_samples * options.max_attempt_factor);
  for (int i = 0; i < max_attempts && r.n_accepted < n_samples; ++i) {
    ++r.n_attempts;
    const auto d = sample_critical_direction(spec, op, sol, seed + static_cast<std::uint64_t>(i),
                                             options);
    if (!d) continue;
    const double q = quadratic_form(spec, mesh, sol.y, sol.u, sol.phi, sol.e, d->z, d->v);
    r.values.push_back(q / inner_q(mesh, d->v, d->v));
    ++r.n_accepted;
  }
  r.lambda_min = std::numeric_limits<double>::infinity();
  for (int n = 1; n <= mesh.nt(); ++n) {
    for (int k = 0; k < mesh.num_nodes(); ++k) {
      r.lambda_min = std::min(r.lambda_min,
                              spec.cost.duu(mesh.point(n, k), sol.y(n, k), sol.u(n, k)));
    }
  }
  if (r.values.empty()) {
    r.low_confidence = true;
    r.min = r.median = r.max = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  std::vector<double> sorted = r.values;
  std::sort(sorted.begin(), sorted.end());
  r.min = sorted.front();
  r.max = sorted.back();
  const std::size_t m = sorted.size();
  r.median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  r.low_confidence = 2 * r.n_accepted < n_samples;
  r.pass = !r.low_confidence && r.min >= options.soc_margin;
  return r;
}

nlohmann::json GrowthReport::to_json() const {
  nlohmann::json j;
  j["n_requested"] = n_requested;
  j["n_feasible"] = n_feasible;
  j["n_tried"] = n_tried;
  j["kappa"] = std::isfinite(kappa) ? nlohmann::json(kappa) : nlohmann::json(nullptr);
  j["radii"] = radii;
  nlohmann::json per = nlohmann::json::array();
  for (double k : kappa_per_radius) {
    per.push_back(std::isfinite(k) ? nlohmann::json(k) : nlohmann::json(nullptr));
  }
  j["kappa_per_radius"] = per;
  j["pass"] = pass;
  return j;
}

GrowthReport growth_test(const ProblemSpec& spec, const EllipticOperator& op, const Solution& sol,
                         int n_perturb, const std::vector<double>& radii, std::uint64_t seed,
                         const SocOptions& options) {
  if (n_perturb < 1) throw InvalidArgument("n_perturb must be positive");
  if (radii.empty()) throw InvalidArgument("growth_test needs at least one radius");
  const Mesh& mesh = op.mesh();
  const Field h_bar = mixed_constraint_values(spec, mesh, sol.y, sol.u);
  const double threshold = std::max(0.0, max_q(h_bar)) + 1e-12;
  const double J_bar = eval_objective(spec, mesh, sol.y, sol.u);

  GrowthReport r;
  r.n_requested = n_perturb;
  r.radii = radii;
  r.kappa = std::numeric_limits<double>::infinity();
  const int per_radius = (n_perturb + static_cast<int>(radii.size()) - 1) /
                         static_cast<int>(radii.size());
  std::uint64_t draw = 0;
  for (double radius : radii) {
    if (!(radius > 0.0)) throw InvalidArgument("radii must be positive");
    double kr = std::numeric_limits<double>::infinity();
    int got = 0;
    for (int attempt = 0; attempt < 20 * per_radius && got < per_radius; ++attempt, ++draw) {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(draw), 0x6709u};
      std::mt19937_64 rng(seq);
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      std::uniform_real_distribution<double> down(0.7, 1.0);
      Field u = sol.u;
      for (int n = 1; n <= mesh.nt(); ++n) {
        for (int k = 0; k < mesh.num_nodes(); ++k) {
          const double d = h_bar(n, k) >= -3.0 * radius * (1.0 + spec.eps) ? -radius * down(rng)
                                                                          : radius * unit(rng);
          u(n, k) = std::clamp(sol.u(n, k) + d, spec.a, spec.b);
        }
      }
      ++r.n_tried;
      const Field du = u - sol.u;
      const double dist2 = inner_q(mesh, du, du);
      if (!(dist2 > 0.0)) continue;
      const Field y = solve_state(spec, op, u, options.pde).y;
      if (max_q(mixed_constraint_values(spec, mesh, y, u)) > threshold) continue;
      const double ratio = (eval_objective(spec, mesh, y, u) - J_bar) / dist2;
      r.ratios.push_back(ratio);
      kr = std::min(kr, ratio);
      ++got;
    }
    r.n_feasible += got;
    r.kappa_per_radius.push_back(kr);
    r.kappa = std::min(r.kappa, kr);
  }
  r.pass = r.n_feasible > 0 && r.kappa > 0.0;
  return r;
}

DenseConeBound dense_cone_bound(const ProblemSpec& spec, const EllipticOperator& op,
                                const Solution& sol, const SocOptions& options) {
  const Mesh& mesh = op.mesh();
  const int nn = mesh.num_nodes();
  const int N = nn * mesh.nt();
  if (N > 400) throw InvalidArgument("dense_cone_bound is limited to 400 control unknowns");
  const std::vector<NodeKind> kind = node_kinds(mesh, sol, options.strong_tol);
  const Field fp = reaction_coefficient(spec, mesh, sol.y);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(nn);

  // Column j of Z is the linearized response to the j-th unit control.
  Eigen::MatrixXd Z(N, N);
  Field unit = Field::zeros(mesh);
  for (int j = 0; j < N; ++j) {
    const int n = j / nn + 1, k = j % nn;
    unit(n, k) = 1.0;
    const Field z = solve_linearized(op, fp, unit, zero, options.pde);
    unit(n, k) = 0.0;
    for (int i = 0; i < N; ++i) Z(i, j) = z(i / nn + 1, i % nn);
  }

  Eigen::VectorXd mass(N), dq(N), dyu(N), duu(N), gy(N);
  for (int i = 0; i < N; ++i) {
    const int n = i / nn + 1, k = i % nn;
    const Point p = mesh.point(n, k);
    const double y = sol.y(n, k), u = sol.u(n, k);
    mass[i] = mesh.dt() * mesh.weight(k);
    dq[i] = mass[i] * (spec.cost.dyy(p, y, u) + sol.e(n, k) * spec.g.dyy(p, y) +
                       sol.phi(n, k) * spec.f.d2(y));
    dyu[i] = mass[i] * spec.cost.dyu(p, y, u);
    duu[i] = mass[i] * spec.cost.duu(p, y, u);
    gy[i] = spec.g.dy(p, y);
  }
  DenseConeBound out;
  out.num_unknowns = N;
  Eigen::MatrixXd H = Z.transpose() * dq.asDiagonal() * Z;
  H += Z.transpose() * dyu.asDiagonal();
  H += dyu.asDiagonal() * Z;
  H.diagonal() += duu;
  H = 0.5 * (H + H.transpose());
  out.hessian = H;

  std::vector<Eigen::RowVectorXd> rows;
  for (int i = 0; i < N; ++i) {
    const NodeKind kd = kind[flat(mesh, i / nn + 1, i % nn)];
    if (kd == NodeKind::strong_box) {
      Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(N);
      r[i] = 1.0;
      rows.push_back(r);
    } else if (kd == NodeKind::strong_mixed) {
      Eigen::RowVectorXd r = gy[i] * Z.row(i);
      r[i] += spec.eps;
      rows.push_back(r);
    }
  }
  Eigen::MatrixXd basis;
  if (rows.empty()) {
    basis = Eigen::MatrixXd::Identity(N, N);
  } else {
    Eigen::MatrixXd B(rows.size(), N);
    for (std::size_t r = 0; r < rows.size(); ++r) B.row(r) = rows[r];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double cut = 1e-10 * (sv.size() ? sv[0] : 1.0);
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i) rank += sv[i] > cut ? 1 : 0;
    basis = svd.matrixV().rightCols(N - rank);
  }
  out.span_dimension = static_cast<int>(basis.cols());
  if (out.span_dimension == 0) {
    out.min_eigenvalue = std::numeric_limits<double>::infinity();
    return out;
  }
  const Eigen::MatrixXd Hs = basis.transpose() * H * basis;
  const Eigen::MatrixXd Ms = basis.transpose() * mass.asDiagonal() * basis;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (Hs + Hs.transpose()),
                                                                0.5 * (Ms + Ms.transpose()));
  if (eig.info() != Eigen::Success) throw InvalidArgument("generalized eigensolver failed");
  out.min_eigenvalue = eig.eigenvalues().minCoeff();
  return out;
}

}  // namespace parakkt
