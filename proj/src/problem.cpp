#include "parakkt/problem.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "parakkt/error.hpp"

namespace parakkt {

std::function<double(const std::array<double, 2>&)> sine_bump(const Domain& domain,
                                                             double amplitude) {
  const double pi = std::numbers::pi;
  if (domain.dim == 1) {
    return [=](const std::array<double, 2>& x) {
      return amplitude * std::sin(pi * x[0] / domain.lx);
    };
  }
  return [=](const std::array<double, 2>& x) {
    return amplitude * std::sin(pi * x[0] / domain.lx) * std::sin(pi * x[1] / domain.ly);
  };
}

namespace {

void require_domain(const Domain& d) {
  if (d.dim != 1 && d.dim != 2) throw UnsupportedDimension(d.dim);
  if (!(d.lx > 0.0) || !(d.ly > 0.0)) throw InvalidArgument("domain lengths must be positive");
}

RunningCost tracking_cost(std::function<double(const Point&)> target, double lambda) {
  RunningCost c;
  c.value = [target, lambda](const Point& p, double y, double u) {
    const double r = y - target(p);
    return 0.5 * r * r + 0.5 * lambda * u * u;
  };
  c.dy = [target](const Point& p, double y, double) { return y - target(p); };
  c.du = [lambda](const Point&, double, double u) { return lambda * u; };
  c.dyy = [](const Point&, double, double) { return 1.0; };
  c.dyu = [](const Point&, double, double) { return 0.0; };
  c.duu = [lambda](const Point&, double, double) { return lambda; };
  return c;
}

}  // namespace

ProblemSpec make_example_cubic(const CubicExampleParams& params, const Domain& domain,
                               double horizon) {
  require_domain(domain);
  if (!(params.gamma > 0.0)) throw InvalidArgument("cubic example needs gamma > 0");
  if (!(params.b > 0.0)) throw InvalidArgument("cubic example needs b > 0");
  if (!(params.control_weight > 0.0)) {
    throw InvalidArgument("cubic example needs control_weight > 0");
  }
  if (params.initial_amplitude < 0.0) {
    throw InvalidArgument("cubic example needs a nonnegative initial datum");
  }
  if (!(horizon > 0.0)) throw InvalidArgument("horizon must be positive");

  ProblemSpec s;
  s.name = "cubic_example";
  const double target = params.target;
  s.cost = tracking_cost([target](const Point&) { return target; }, params.control_weight);
  s.f.value = [](double y) { return y * y * y + y; };
  s.f.d1 = [](double y) { return 3.0 * y * y + 1.0; };
  s.f.d2 = [](double y) { return 6.0 * y; };
  const double gamma = params.gamma;
  s.g.value = [gamma](const Point&, double y) { return -y - gamma; };
  s.g.dy = [](const Point&, double) { return -1.0; };
  s.g.dyy = [](const Point&, double) { return 0.0; };
  s.a = 0.0;
  s.b = params.b;
  s.eps = 1.0;
  s.y0 = sine_bump(domain, params.initial_amplitude);
  s.diffusion = Diffusion::constant(params.diffusion);
  s.domain = domain;
  s.horizon = horizon;
  s.parameters = {{"gamma", params.gamma},
                  {"b", params.b},
                  {"target", params.target},
                  {"control_weight", params.control_weight},
                  {"initial_amplitude", params.initial_amplitude},
                  {"diffusion", params.diffusion}};
  check_derivatives(s);
  return s;
}

ProblemSpec make_convex_quadratic(const ConvexQuadraticParams& params, const Domain& domain,
                                  double horizon) {
  require_domain(domain);
  if (!(params.control_weight > 0.0)) {
    throw InvalidArgument("convex quadratic needs control_weight > 0");
  }
  if (params.reaction < 0.0) throw InvalidArgument("convex quadratic needs reaction >= 0");
  if (!(params.eps > 0.0)) throw InvalidArgument("eps must be positive");
  if (!(params.a < params.b)) throw InvalidArgument("control bounds need a < b");
  if (!(horizon > 0.0)) throw InvalidArgument("horizon must be positive");

  ProblemSpec s;
  s.name = "convex_quadratic";
  std::function<double(const Point&)> target = params.target_fn;
  if (!target) {
    const auto bump = sine_bump(domain, params.target_amplitude);
    const double offset = params.target;
    target = [bump, offset](const Point& p) { return offset + bump(p.x); };
  }
  s.cost = tracking_cost(target, params.control_weight);
  const double c = params.reaction;
  s.f.value = [c](double y) { return c * y; };
  s.f.d1 = [c](double) { return c; };
  s.f.d2 = [](double) { return 0.0; };
  const double g1 = params.g_slope;
  const double g0 = params.g_offset;
  s.g.value = [g1, g0](const Point&, double y) { return g1 * y + g0; };
  s.g.dy = [g1](const Point&, double) { return g1; };
  s.g.dyy = [](const Point&, double) { return 0.0; };
  s.a = params.a;
  s.b = params.b;
  s.eps = params.eps;
  s.y0 = sine_bump(domain, params.initial_amplitude);
  s.diffusion = Diffusion::constant(params.diffusion);
  s.domain = domain;
  s.horizon = horizon;
  s.parameters = {{"target", params.target},
                  {"target_amplitude", params.target_amplitude},
                  {"control_weight", params.control_weight},
                  {"reaction", params.reaction},
                  {"g_slope", params.g_slope},
                  {"g_offset", params.g_offset},
                  {"eps", params.eps},
                  {"a", params.a},
                  {"b", params.b},
                  {"initial_amplitude", params.initial_amplitude},
                  {"diffusion", params.diffusion}};
  check_derivatives(s);
  return s;
}

void validate_problem(const ProblemSpec& spec, const Mesh& mesh) {
  if (!(spec.a < spec.b)) throw InvalidArgument("control bounds need a < b");
  if (!(spec.eps > 0.0)) throw InvalidArgument("eps must be positive");
  const auto& c = spec.cost;
  if (!c.value || !c.dy || !c.du || !c.dyy || !c.dyu || !c.duu || !spec.f.value ||
      !spec.f.d1 || !spec.f.d2 || !spec.g.value || !spec.g.dy || !spec.g.dyy || !spec.y0) {
    throw InvalidArgument("problem '" + spec.name + "' has an empty callback");
  }
  if (spec.f.value(0.0) != 0.0) throw InvalidArgument("f(0) must vanish");
  if (mesh.dim() != spec.domain.dim || mesh.lx() != spec.domain.lx ||
      (mesh.dim() == 2 && mesh.ly() != spec.domain.ly) || mesh.T() != spec.horizon) {
    throw InvalidArgument("mesh (" + mesh.describe() + ") does not match the problem domain");
  }
  for (const auto& x : mesh.boundary_points()) {
    if (std::abs(spec.y0(x)) > 1e-12) {
      std::ostringstream os;
      os << "initial datum must vanish on the boundary, y0(" << x[0] << ", " << x[1]
         << ") = " << spec.y0(x);
      throw InvalidArgument(os.str());
    }
  }
}

namespace {

double central_difference(const std::function<double(double)>& fn, double at) {
  const double h = 1e-5 * (1.0 + std::abs(at));
  return (fn(at + h) - fn(at - h)) / (2.0 * h);
}

void compare(const char* what, double analytic, double fd, const Point& p, double y,
             double u) {
  if (!(std::abs(analytic - fd) <= 1e-5 * (1.0 + std::abs(analytic)))) {
    std::ostringstream os;
    os << "derivative " << what << " disagrees with finite differences at (x=" << p.x[0]
       << ", " << p.x[1] << ", t=" << p.t << ", y=" << y << ", u=" << u
       << "): analytic " << analytic << " vs " << fd;
    throw InvalidArgument(os.str());
  }
}

}  // namespace

void check_derivatives(const ProblemSpec& spec, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto& c = spec.cost;
  for (int s = 0; s < samples; ++s) {
    Point p;
    p.x[0] = spec.domain.lx * unit(rng);
    p.x[1] = spec.domain.dim == 2 ? spec.domain.ly * unit(rng) : 0.0;
    p.t = spec.horizon * unit(rng);
    const double y = -2.0 + 4.0 * unit(rng);
    const double u = spec.a + (spec.b - spec.a) * unit(rng);

    compare("L_y", c.dy(p, y, u), central_difference([&](double v) { return c.value(p, v, u); }, y), p, y, u);
    compare("L_u", c.du(p, y, u), central_difference([&](double v) { return c.value(p, y, v); }, u), p, y, u);
    compare("L_yy", c.dyy(p, y, u), central_difference([&](double v) { return c.dy(p, v, u); }, y), p, y, u);
    compare("L_yu", c.dyu(p, y, u), central_difference([&](double v) { return c.dy(p, y, v); }, u), p, y, u);
    compare("L_uu", c.duu(p, y, u), central_difference([&](double v) { return c.du(p, y, v); }, u), p, y, u);
    compare("f'", spec.f.d1(y), central_difference(spec.f.value, y), p, y, u);
    compare("f''", spec.f.d2(y), central_difference(spec.f.d1, y), p, y, u);
    compare("g_y", spec.g.dy(p, y), central_difference([&](double v) { return spec.g.value(p, v); }, y), p, y, u);
    compare("g_yy", spec.g.dyy(p, y), central_difference([&](double v) { return spec.g.dy(p, v); }, y), p, y, u);
  }
}

double eval_objective(const ProblemSpec& spec, const Mesh& mesh, const Field& y, const Field& u) {
  require_matches(y, mesh, "state");
  require_matches(u, mesh, "control");
  double total = 0.0;
  for (int n = 1; n < mesh.num_levels(); ++n) {
    double level_sum = 0.0;
    for (int k = 0; k < mesh.num_nodes(); ++k) {
      const double v = spec.cost.value(mesh.point(n, k), y(n, k), u(n, k));
      if (!std::isfinite(v)) throw NonFiniteValue("running cost L", n, k);
      level_sum += mesh.weight(k) * v;
    }
    total += level_sum;
  }
  return total * mesh.dt();
}

HypothesisReport check_hypotheses(const ProblemSpec& spec, std::pair<double, double> y_range,
                                  std::pair<double, double> u_range, int samples,
                                  std::uint64_t seed) {
  if (samples < 2) throw InvalidArgument("check_hypotheses needs at least 2 samples");
  if (!(y_range.first < y_range.second) || !(u_range.first <= u_range.second)) {
    throw InvalidArgument("check_hypotheses needs non-degenerate ranges");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  HypothesisReport rep;
  rep.f_at_zero = spec.f.value(0.0);
  const double inf = std::numeric_limits<double>::infinity();
  rep.h2 = {"H2", false, inf, {}, 0.0, 0.0};
  rep.h4 = {"H4", false, inf, {}, 0.0, 0.0};
  rep.h6 = {"H6'", false, inf, {}, 0.0, 0.0};

  std::vector<double> ys;
  for (int i = 0; i < samples; ++i) {
    ys.push_back(y_range.first + (y_range.second - y_range.first) * i / (samples - 1));
  }
  if (y_range.first <= 0.0 && 0.0 <= y_range.second) ys.push_back(0.0);

  for (double y : ys) {
    Point p;
    p.x[0] = spec.domain.lx * unit(rng);
    p.x[1] = spec.domain.dim == 2 ? spec.domain.ly * unit(rng) : 0.0;
    p.t = spec.horizon * unit(rng);
    const double u = u_range.first + (u_range.second - u_range.first) * unit(rng);

    const double fp = spec.f.d1(y);
    if (fp < rep.h2.margin) rep.h2 = {"H2", false, fp, p, y, u};

    const double ratio = -spec.g.dy(p, y) / spec.eps;
    const double h4 = std::min(fp - ratio, ratio);
    if (h4 < rep.h4.margin) rep.h4 = {"H4", false, h4, p, y, u};

    const double luu = spec.cost.duu(p, y, u);
    if (luu < rep.h6.margin) rep.h6 = {"H6'", false, luu, p, y, u};
  }
  rep.h2.pass = rep.f_at_zero == 0.0 && rep.h2.margin >= 0.0;
  rep.h4.pass = rep.h4.margin >= -1e-12;
  rep.h6.pass = rep.h6.margin > 0.0;
  return rep;
}

}  // namespace parakkt
