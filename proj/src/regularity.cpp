#include "parakkt/regularity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include "parakkt/error.hpp"
#include "parakkt/pde.hpp"

namespace parakkt {

namespace {

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

struct Offset {
  int di, dj, dn;
};

}  // namespace

nlohmann::json HolderEstimate::to_json() const {
  nlohmann::json j;
  j["defined"] = defined;
  j["low_confidence"] = low_confidence;
  j["alpha"] = defined ? finite_or_null(alpha) : nlohmann::json(nullptr);
  j["alpha_raw"] = defined ? finite_or_null(alpha_raw) : nlohmann::json(nullptr);
  j["band"] = finite_or_null(band);
  j["C"] = finite_or_null(C);
  j["pairs"] = pairs;
  j["usable_bins"] = usable_bins;
  j["fit_residual"] = finite_or_null(fit_residual);
  if (!note.empty()) j["note"] = note;
  return j;
}

HolderEstimate holder_estimate(const Field& field, const Mesh& mesh, const HolderOptions& opt,
                               const Mask* region) {
  require_matches(field, mesh, "field");
  if (opt.n_pairs < 100) throw InvalidArgument("holder_estimate needs n_pairs >= 100");
  const int nx = mesh.nx(), ny = mesh.ny(), nt = mesh.nt();
  const double hx = mesh.hx(), hy = mesh.dim() == 2 ? mesh.hy() : 0.0;
  auto tdist = [&](int dn) {
    const double dt = std::abs(dn) * mesh.dt();
    return opt.parabolic ? std::sqrt(dt) : dt;
  };
  auto dist = [&](const Offset& o) {
    const double dx = o.di * hx, dy = o.dj * hy;
    return std::sqrt(dx * dx + dy * dy) + tdist(o.dn);
  };
  auto in_region = [&](int n, int k) {
    return !region || (*region)[static_cast<std::size_t>(n) * mesh.num_nodes() + k];
  };

  const double diameter =
      std::sqrt(mesh.lx() * mesh.lx() + (mesh.dim() == 2 ? mesh.ly() * mesh.ly() : 0.0)) +
      tdist(nt);
  const double spacing = mesh.dim() == 2 ? std::min(hx, hy) : hx;
  const double floor_d = opt.min_distance > 0.0 ? opt.min_distance : 2.0 * spacing;
  const double cap = opt.max_distance > 0.0 ? opt.max_distance : diameter / 4.0;
  if (!(opt.bin_ratio > 1.0)) throw InvalidArgument("bin_ratio must exceed 1");

  HolderEstimate est;
  for (double lo = floor_d; lo * opt.bin_ratio <= cap * (1.0 + 1e-12); lo *= opt.bin_ratio) {
    est.bins.push_back({lo, lo * opt.bin_ratio, 0.0, 0});
  }
  if (est.bins.empty()) {
    est.low_confidence = true;
    est.note = "mesh too coarse for the requested distance range";
    return est;
  }

  // Bucket every lattice offset (dn >= 0, and (di, dj) > 0 lexicographically
  // when dn == 0, so each unordered pair is seen once).
  std::vector<std::vector<Offset>> per_bin(est.bins.size());
  for (int dn = 0; dn < nt; ++dn) {
    for (int dj = -(ny - 1); dj <= ny - 1; ++dj) {
      for (int di = -(nx - 1); di <= nx - 1; ++di) {
        if (dn == 0 && (dj < 0 || (dj == 0 && di <= 0))) continue;
        const Offset o{di, dj, dn};
        const double d = dist(o);
        for (std::size_t b = 0; b < est.bins.size(); ++b) {
          if (d >= est.bins[b].lo && d < est.bins[b].hi) {
            per_bin[b].push_back(o);
            break;
          }
        }
      }
    }
  }

  std::mt19937_64 rng(opt.seed);
  const long budget_per_bin = opt.n_pairs / static_cast<long>(est.bins.size());
  double fmin = field.level(1).minCoeff(), fmax = field.level(1).maxCoeff();
  for (int n = 1; n <= nt; ++n) {
    fmin = std::min(fmin, field.level(n).minCoeff());
    fmax = std::max(fmax, field.level(n).maxCoeff());
  }
  const double flat_tol = 1e-13 * std::max(1.0, std::max(std::abs(fmin), std::abs(fmax)));

  for (std::size_t b = 0; b < est.bins.size(); ++b) {
    std::vector<Offset>& offs = per_bin[b];
    std::shuffle(offs.begin(), offs.end(), rng);
    HolderBin& bin = est.bins[b];
    for (const Offset& o : offs) {
      if (bin.pairs >= budget_per_bin) break;
      const double d = dist(o);
      for (int n = 1; n + o.dn <= nt; ++n) {
        for (int j = std::max(0, -o.dj); j < ny && j + o.dj < ny; ++j) {
          for (int i = std::max(0, -o.di); i < nx && i + o.di < nx; ++i) {
            const int k = mesh.index(i, j), k2 = mesh.index(i + o.di, j + o.dj);
            if (!in_region(n, k) && !in_region(n + o.dn, k2)) continue;
            const double inc = std::abs(field(n, k) - field(n + o.dn, k2));
            if (inc > bin.max_increment) {
              bin.max_increment = inc;
              bin.at_distance = d;
            }
            ++bin.pairs;
          }
        }
      }
    }
    est.pairs += bin.pairs;
  }

  std::vector<double> xs, ys;
  for (const HolderBin& bin : est.bins) {
    if (bin.pairs > 0 && bin.max_increment > flat_tol) {
      xs.push_back(std::log(bin.at_distance));
      ys.push_back(std::log(bin.max_increment));
    }
  }
  est.usable_bins = static_cast<int>(xs.size());
  if (xs.empty()) {
    est.note = "undefined exponent (field is constant on the sampled pairs)";
    est.low_confidence = true;
    return est;
  }
  est.defined = true;
  if (xs.size() == 1) {
    est.low_confidence = true;
    est.note = "single usable bin";
    est.alpha_raw = est.alpha = 1.05;
    est.C = std::exp(ys[0] - est.alpha * xs[0]);
    return est;
  }
  const double m = static_cast<double>(xs.size());
  const double xm = std::accumulate(xs.begin(), xs.end(), 0.0) / m;
  const double ym = std::accumulate(ys.begin(), ys.end(), 0.0) / m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - xm) * (xs[i] - xm);
    sxy += (xs[i] - xm) * (ys[i] - ym);
  }
  est.alpha_raw = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (ym + est.alpha_raw * (xs[i] - xm));
    rss += r * r;
  }
  est.fit_residual = std::sqrt(rss / m);
  est.band = xs.size() > 2 ? 2.0 * std::sqrt(rss / (m - 2.0) / sxx) : 0.0;
  est.alpha = std::clamp(est.alpha_raw, 1e-3, 1.05);
  if (est.alpha_raw > 1.05) est.note = "exponent >= ~1 (clipped)";
  if (est.alpha_raw <= 1e-3) est.note = "nonpositive slope (clipped)";
  est.C = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    est.C = std::max(est.C, std::exp(ys[i] - est.alpha * xs[i]));
  }
  est.low_confidence = est.usable_bins < 3 || est.pairs < 100;
  return est;
}

nlohmann::json RegularityReport::to_json() const {
  nlohmann::json j;
  j["y"] = y.to_json();
  j["u"] = u.to_json();
  j["phi"] = phi.to_json();
  j["e"] = e.to_json();
  j["ehat"] = ehat.to_json();
  j["e_on_0"] = e_on_0.to_json();
  j["ehat_on_a"] = ehat_on_a.to_json();
  j["ehat_on_b"] = ehat_on_b.to_json();
  j["ehat_on_ab"] = ehat_on_ab.to_json();
  j["alpha_star"] = alpha_star;
  j["R0"] = R0;
  return j;
}

RegularityReport regularity_report(const Mesh& mesh, const Field& y, const Field& u,
                                   const Field& phi, const Field& e, const Field& ehat,
                                   const ActiveSets& sets, const HolderOptions& options) {
  RegularityReport r;
  r.y = holder_estimate(y, mesh, options);
  r.u = holder_estimate(u, mesh, options);
  r.phi = holder_estimate(phi, mesh, options);
  r.e = holder_estimate(e, mesh, options);
  r.ehat = holder_estimate(ehat, mesh, options);
  r.e_on_0 = holder_estimate(e, mesh, options, &sets.mask_0);
  r.ehat_on_a = holder_estimate(ehat, mesh, options, &sets.mask_a);
  r.ehat_on_b = holder_estimate(ehat, mesh, options, &sets.mask_b);
  r.ehat_on_ab = holder_estimate(ehat, mesh, options, &sets.mask_ab);
  if (const auto c = check_positive_density(DomainDescriptor::from(mesh.domain()))) {
    r.alpha_star = c->alpha_star;
    r.R0 = c->R0;
  }
  return r;
}

nlohmann::json MaxPrincipleReport::to_json() const {
  nlohmann::json j;
  j["nonneg_applicable"] = nonneg_applicable;
  j["min_y"] = min_y;
  j["nonneg_pass"] = nonneg_pass;
  j["comparison_checked"] = comparison_checked;
  j["min_difference"] = min_difference;
  j["strict_nodes"] = strict_nodes;
  j["comparison_pass"] = comparison_pass;
  return j;
}

MaxPrincipleReport maximum_principle_check(const ProblemSpec& spec, const EllipticOperator& op,
                                           const Field& y, const Field& u, const Field* u1,
                                           const Field* u2, const PdeOptions& options) {
  const Mesh& mesh = op.mesh();
  require_matches(y, mesh, "state");
  require_matches(u, mesh, "control");
  MaxPrincipleReport r;
  r.min_y = y.values().minCoeff();
  r.nonneg_applicable = min_q(u) >= 0.0 && y.level(0).minCoeff() >= 0.0;
  if (r.nonneg_applicable) r.nonneg_pass = r.min_y >= -1e-12;

  if (u1 || u2) {
    if (!u1 || !u2) throw InvalidArgument("comparison needs both controls");
    require_matches(*u1, mesh, "control u1");
    require_matches(*u2, mesh, "control u2");
    if (min_q(*u1 - *u2) < 0.0) throw InvalidArgument("comparison needs u1 >= u2");
    const Field d = solve_state(spec, op, *u1, options).y - solve_state(spec, op, *u2, options).y;
    r.comparison_checked = true;
    r.min_difference = d.values().minCoeff();
    for (int n = 1; n <= mesh.nt(); ++n) {
      for (int k = 0; k < mesh.num_nodes(); ++k) r.strict_nodes += d(n, k) > 1e-12 ? 1 : 0;
    }
    r.comparison_pass = r.min_difference >= -1e-12;
  }
  return r;
}

DomainDescriptor DomainDescriptor::from(const Domain& d) {
  if (d.dim == 1) return {"interval", {d.lx}};
  return {"rectangle", {d.lx, d.ly}};
}

std::optional<DensityConstants> check_positive_density(const DomainDescriptor& domain) {
  const bool interval = domain.shape == "interval" && domain.sides.size() == 1;
  const bool rectangle = domain.shape == "rectangle" && domain.sides.size() == 2;
  if (!interval && !rectangle) return std::nullopt;
  for (double s : domain.sides) {
    if (!(s > 0.0)) return std::nullopt;
  }
  DensityConstants c;
  c.R0 = *std::min_element(domain.sides.begin(), domain.sides.end()) / 2.0;
  return c;
}

}  // namespace parakkt
