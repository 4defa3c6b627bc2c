#include "cli.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "parakkt/config.hpp"
#include "parakkt/error.hpp"
#include "parakkt/io.hpp"
#include "parakkt/kkt.hpp"
#include "parakkt/optimize.hpp"
#include "parakkt/regularity.hpp"
#include "parakkt/soc.hpp"

namespace parakkt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::optional<long> seed;
  int jobs = 1;
  bool quiet = false;
  std::string dir;  // positional solution directory
};

// Raised for a failing pipeline stage; the message names the stage.
struct StageFailure : Error {
  using Error::Error;
};

class Log {
 public:
  Log(std::ostream& out, std::ostream& err, bool quiet) : out_(out), err_(err), quiet_(quiet) {}
  void progress(const std::string& s) {
    if (quiet_) return;
    std::lock_guard<std::mutex> lock(mu_);
    err_ << s << '\n';
  }
  void warn(const std::string& s) {
    std::lock_guard<std::mutex> lock(mu_);
    err_ << "warning: " << s << '\n';
  }
  void result(const std::string& s) {
    if (quiet_) return;
    std::lock_guard<std::mutex> lock(mu_);
    out_ << s << '\n';
  }

 private:
  std::ostream& out_;
  std::ostream& err_;
  bool quiet_;
  std::mutex mu_;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string path_in(const std::string& dir, const std::string& file) {
  return (fs::path(dir) / file).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir);
}

RunConfig apply_flags(RunConfig cfg, const Flags& f) {
  if (f.seed) cfg = cfg.with_seed(static_cast<std::uint64_t>(*f.seed));
  if (!f.out.empty()) cfg = cfg.with_output_dir(f.out);
  return cfg;
}

// Config as stored next to a solution: no output location and no sweep, so
// the file only depends on what was computed.
std::string stored_config(const RunConfig& cfg) {
  Ini ini = cfg.source;
  ini.erase_section("output");
  ini.erase_section("sweep");
  return ini.to_string();
}

// Solution directory and config for the post-processing commands: the
// directory comes from the positional argument, then --out, then the
// config; the config from --config, then <dir>/config.ini.
std::pair<std::string, RunConfig> locate(const Flags& f) {
  std::optional<RunConfig> cfg;
  if (!f.config.empty()) cfg = RunConfig::load(f.config);
  std::string dir = f.dir;
  if (dir.empty()) dir = f.out;
  if (dir.empty() && cfg) dir = cfg->output_dir;
  if (dir.empty()) throw ConfigError("no solution directory given", 0);
  if (!fs::is_directory(dir)) throw IoError("solution directory " + dir + " does not exist");
  if (!cfg) {
    const std::string stored = path_in(dir, "config.ini");
    if (!fs::exists(stored)) {
      throw IoError(dir + " has no config.ini and no --config was given");
    }
    cfg = RunConfig::load(stored);
  }
  RunConfig c = *cfg;
  if (f.seed) c = c.with_seed(static_cast<std::uint64_t>(*f.seed));
  return {dir, c};
}

struct Loaded {
  LoadedSolution fields;
  ProblemSpec spec;
  EllipticOperator op;
};

Loaded load_solution(const std::string& dir, const RunConfig& cfg, Log& log) {
  LoadedSolution fields = read_solution_fields(dir);
  const Mesh& m = fields.mesh;
  if (!m.same_grid(cfg.build_mesh())) {
    log.warn("grid of " + dir + " (" + m.describe() + ") differs from the config; using the files");
  }
  ProblemSpec spec = cfg.build_problem(m.domain(), m.T());
  EllipticOperator op = assemble_elliptic(m, spec.diffusion);
  return {std::move(fields), std::move(spec), std::move(op)};
}

json mesh_json(const Mesh& m) {
  return {{"dim", m.dim()}, {"nx", m.nx()}, {"ny", m.ny()}, {"nt", m.nt()},
          {"lx", m.lx()},   {"ly", m.ly()}, {"T", m.T()}};
}

json sets_json(const Mesh& mesh, const ActiveSets& s) {
  return {{"tol_act", s.tol_act},
          {"count_a", count(s.mask_a)},
          {"count_b", count(s.mask_b)},
          {"count_ab", count(s.mask_ab)},
          {"count_0", count(s.mask_0)},
          {"measure_a", region_measure(mesh, s.mask_a)},
          {"measure_b", region_measure(mesh, s.mask_b)},
          {"measure_0", region_measure(mesh, s.mask_0)},
          {"degenerate", s.degenerate_count()}};
}

json separation_json(const SeparationMargins& s) {
  return {{"gamma", finite_or_null(s.gamma)},
          {"gamma_b", finite_or_null(s.gamma_b)},
          {"worst_level", s.worst_level},
          {"worst_node", s.worst_node}};
}

// ---- solve -----------------------------------------------------------------

struct SolveOutcome {
  Mesh mesh;
  ProblemSpec spec;
  Solution sol;
};

SolveOutcome solve_to_dir(const RunConfig& cfg, const std::string& dir, Log& log) {
  Mesh mesh = cfg.build_mesh();
  ProblemSpec spec = cfg.build_problem();
  const EllipticOperator op = assemble_elliptic(mesh, spec.diffusion);
  log.progress("solve: " + spec.name + " on " + mesh.describe());
  Solution sol;
  try {
    sol = solve_augmented_lagrangian(spec, op, default_initial_control(spec, mesh), cfg.optimizer);
  } catch (const Error& e) {
    throw StageFailure(std::string("solve failed: ") + e.what());
  }
  ensure_dir(dir);
  write_solution_fields(dir, mesh, sol);
  json report;
  report["problem"] = {{"name", spec.name}, {"parameters", spec.parameters}};
  report["mesh"] = mesh_json(mesh);
  report["status"] = sol.status;
  report["certified"] = sol.certified;
  report["J"] = sol.J;
  report["outer_iterations"] = sol.outer_iterations;
  report["kkt"] = sol.kkt.to_json();
  report["active_sets"] = sets_json(mesh, sol.sets);
  write_json(path_in(dir, "report.json"), report);
  write_text(path_in(dir, "config.ini"), stored_config(cfg));
  return {std::move(mesh), std::move(spec), std::move(sol)};
}

int cmd_solve(const Flags& f, Log& log) {
  if (f.config.empty()) throw ConfigError("solve needs --config", 0);
  const RunConfig cfg = apply_flags(RunConfig::load(f.config), f);
  const SolveOutcome r = solve_to_dir(cfg, cfg.output_dir, log);
  log.result("solve: " + r.sol.status + ", J = " + fmt(r.sol.J) + ", max residual " +
             short_num(r.sol.kkt.max_residual()) + (r.sol.certified ? ", certified" : ", NOT certified") +
             " -> " + cfg.output_dir);
  return r.sol.certified ? kCertified : kCheckFailed;
}

// ---- certify ---------------------------------------------------------------

int cmd_certify(const Flags& f, Log& log) {
  const auto [dir, cfg] = locate(f);
  const Loaded L = load_solution(dir, cfg, log);
  const Mesh& mesh = L.fields.mesh;
  const VerificationConfig& v = cfg.verification;
  log.progress("certify: " + dir);
  Solution sol;
  try {
    sol = certify_control(L.spec, L.op, L.fields.u, v.kkt_tol, v.tol_act, cfg.optimizer.pde);
  } catch (const Error& e) {
    throw StageFailure(std::string("certify failed: ") + e.what());
  }
  json j;
  j["kkt"] = sol.kkt.to_json();
  j["certified"] = sol.kkt.certified;
  j["state_mismatch"] = (sol.y - L.fields.y).values().cwiseAbs().maxCoeff();
  j["active_sets"] = sets_json(mesh, sol.sets);
  j["separation"] = separation_json(check_separation(L.spec, mesh, sol.y, sol.u, &sol.sets.mask_b));
  json rob = json::array();
  bool robinson_ok = true;
  for (double rho : v.robinson_rho) {
    try {
      const RobinsonReport r =
          verify_robinson(L.spec, L.op, sol.y, sol.u, rho, v.tol_act, cfg.optimizer.pde);
      robinson_ok = robinson_ok && r.success;
      rob.push_back(r.to_json());
    } catch (const Error& e) {
      robinson_ok = false;
      rob.push_back({{"rho", rho}, {"success", false}, {"message", e.what()}});
    }
  }
  j["robinson"] = rob;
  write_json(path_in(dir, "kkt.json"), j);
  if (!robinson_ok) log.warn("Robinson construction did not succeed for every rho (see kkt.json)");
  log.result("certify: max residual " + short_num(sol.kkt.max_residual()) +
             (sol.kkt.certified ? ", certified" : ", NOT certified"));
  return sol.kkt.certified ? kCertified : kCheckFailed;
}

// ---- soc -------------------------------------------------------------------

int cmd_soc(const Flags& f, Log& log) {
  const auto [dir, cfg] = locate(f);
  const Loaded L = load_solution(dir, cfg, log);
  const VerificationConfig& v = cfg.verification;
  log.progress("soc: " + dir);
  const Solution sol =
      certify_control(L.spec, L.op, L.fields.u, v.kkt_tol, v.tol_act, cfg.optimizer.pde);
  const SocOptions opt = cfg.soc_options();
  const SOCReport soc = min_rayleigh(L.spec, L.op, sol, v.soc_samples, v.seed, opt);
  const GrowthReport growth =
      growth_test(L.spec, L.op, sol, v.growth_samples, v.growth_radii, v.seed + 1, opt);
  json j;
  j["soc"] = soc.to_json();
  j["growth"] = growth.to_json();
  j["kkt_certified"] = sol.kkt.certified;
  write_json(path_in(dir, "soc.json"), j);
  std::string csv = "sample,value\n";
  for (std::size_t i = 0; i < soc.values.size(); ++i) {
    csv += std::to_string(i) + "," + fmt(soc.values[i]) + "\n";
  }
  write_text(path_in(dir, "samples.csv"), csv);
  std::string gcsv = "sample,ratio\n";
  for (std::size_t i = 0; i < growth.ratios.size(); ++i) {
    gcsv += std::to_string(i) + "," + fmt(growth.ratios[i]) + "\n";
  }
  write_text(path_in(dir, "growth.csv"), gcsv);
  if (soc.low_confidence) log.warn("few accepted cone directions; the sampled minimum is low-confidence");
  if (soc.n_accepted > 0 && soc.min < 0.0) log.warn("negative second-order value sampled");
  const bool ok = soc.pass && growth.pass;
  log.result("soc: min " + short_num(soc.min) + " over " + std::to_string(soc.n_accepted) +
             " directions, kappa " + short_num(growth.kappa) + (ok ? ", pass" : ", FAIL"));
  return ok ? kCertified : kCheckFailed;
}

// ---- regularity ------------------------------------------------------------

void append_bins(std::string& csv, const std::string& name, const HolderEstimate& h) {
  for (const HolderBin& b : h.bins) {
    csv += name + "," + fmt(b.lo) + "," + fmt(b.hi) + "," + fmt(b.at_distance) + "," +
           fmt(b.max_increment) + "," + std::to_string(b.pairs) + "\n";
  }
}

int cmd_regularity(const Flags& f, Log& log) {
  const auto [dir, cfg] = locate(f);
  const Loaded L = load_solution(dir, cfg, log);
  const LoadedSolution& s = L.fields;
  log.progress("regularity: " + dir);
  const double tol = cfg.verification.tol_act >= 0.0 ? cfg.verification.tol_act
                                                     : default_tol_act(L.spec);
  const ActiveSets sets = classify_active_sets(L.spec, s.mesh, s.y, s.u, tol);
  const RegularityReport rep =
      regularity_report(s.mesh, s.y, s.u, s.phi, s.e, s.ehat, sets, cfg.holder_options());
  const MaxPrincipleReport mp =
      maximum_principle_check(L.spec, L.op, s.y, s.u, nullptr, nullptr, cfg.optimizer.pde);
  json j;
  j["holder"] = rep.to_json();
  j["maximum_principle"] = mp.to_json();
  json warnings = json::array();
  const std::pair<const char*, const HolderEstimate*> named[] = {
      {"y", &rep.y},          {"u", &rep.u},
      {"phi", &rep.phi},      {"e", &rep.e},
      {"ehat", &rep.ehat},    {"e_on_0", &rep.e_on_0},
      {"ehat_on_a", &rep.ehat_on_a}, {"ehat_on_b", &rep.ehat_on_b},
      {"ehat_on_ab", &rep.ehat_on_ab}};
  std::string csv = "field,lo,hi,at_distance,max_increment,pairs\n";
  for (const auto& [name, h] : named) {
    append_bins(csv, name, *h);
    if (!h->defined) {
      warnings.push_back(std::string(name) + ": " + h->note);
      log.warn(std::string(name) + ": " + h->note);
    } else if (h->low_confidence) {
      warnings.push_back(std::string(name) + ": low confidence (" + std::to_string(h->usable_bins) +
                         " usable bins)");
    }
  }
  j["warnings"] = warnings;
  write_json(path_in(dir, "regularity.json"), j);
  write_text(path_in(dir, "bins.csv"), csv);
  log.result("regularity: alpha y " + short_num(rep.y.alpha) + ", phi " + short_num(rep.phi.alpha) +
             ", e " + short_num(rep.e.alpha) + (mp.pass() ? "" : ", maximum principle FAILED"));
  return mp.pass() ? kCertified : kCheckFailed;
}

// ---- sweep -----------------------------------------------------------------

struct SweepRow {
  std::string value;
  bool ran = false;
  bool certified = false;
  std::string status;
  int nx = 0, ny = 0, nt = 0;
  double J = 0.0, max_residual = 0.0, gamma = 0.0, configured_gamma = 0.0;
  double alpha_y = 0.0, alpha_u = 0.0, alpha_phi = 0.0, alpha_e = 0.0, kappa = 0.0;
};

SweepRow run_point(const RunConfig& point, const std::string& dir, Log& log) {
  SweepRow row;
  const SolveOutcome r = solve_to_dir(point, dir, log);
  const Mesh& mesh = r.mesh;
  const EllipticOperator op = assemble_elliptic(mesh, r.spec.diffusion);
  row.ran = true;
  row.certified = r.sol.certified;
  row.status = r.sol.status;
  row.nx = mesh.nx();
  row.ny = mesh.ny();
  row.nt = mesh.nt();
  row.J = r.sol.J;
  row.max_residual = r.sol.kkt.max_residual();
  row.gamma = check_separation(r.spec, mesh, r.sol.y, r.sol.u, &r.sol.sets.mask_b).gamma;
  const auto it = r.spec.parameters.find("gamma");
  row.configured_gamma = it == r.spec.parameters.end() ? std::nan("") : it->second;
  const HolderOptions ho = point.holder_options();
  row.alpha_y = holder_estimate(r.sol.y, mesh, ho).alpha;
  row.alpha_u = holder_estimate(r.sol.u, mesh, ho).alpha;
  row.alpha_phi = holder_estimate(r.sol.phi, mesh, ho).alpha;
  row.alpha_e = holder_estimate(r.sol.e, mesh, ho).alpha;
  const VerificationConfig& v = point.verification;
  row.kappa = growth_test(r.spec, op, r.sol, v.growth_samples, v.growth_radii, v.seed + 1,
                          point.soc_options())
                  .kappa;
  return row;
}

int cmd_sweep(const Flags& f, Log& log) {
  if (f.config.empty()) throw ConfigError("sweep needs --config", 0);
  const RunConfig cfg = apply_flags(RunConfig::load(f.config), f);
  if (!cfg.sweep) throw ConfigError("sweep needs a [sweep] section with key and values", 0);
  if (f.jobs < 1) throw ConfigError("--jobs must be >= 1", 0);
  const SweepConfig& sw = *cfg.sweep;

  // Validate every point before running any.
  Ini base = cfg.source;
  base.erase_section("sweep");
  const RunConfig base_cfg = RunConfig::from_ini(base);
  std::vector<RunConfig> points;
  for (const std::string& value : sw.values) points.push_back(base_cfg.with_override(sw.key, value));
  ensure_dir(cfg.output_dir);

  std::vector<SweepRow> rows(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      char name[32];
      std::snprintf(name, sizeof name, "point_%03zu", i);
      const std::string dir = path_in(cfg.output_dir, name);
      try {
        rows[i] = run_point(points[i], dir, log);
      } catch (const std::exception& e) {
        rows[i].status = std::string("error: ") + e.what();
        log.warn(std::string(name) + ": " + e.what());
      }
      rows[i].value = sw.values[i];
    }
  };
  const int jobs = std::min<int>(f.jobs, static_cast<int>(points.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  std::string csv =
      "point,key,value,nx,ny,nt,J,certified,max_residual,gamma_measured,gamma_configured,"
      "alpha_y,alpha_u,alpha_phi,alpha_e,kappa,status\n";
  bool all_ok = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SweepRow& r = rows[i];
    all_ok = all_ok && r.ran && r.certified;
    std::string status = r.status;
    for (char& c : status) {
      if (c == ',' || c == '\n') c = ';';
    }
    csv += std::to_string(i) + "," + sw.key + "," + r.value + ",";
    if (r.ran) {
      csv += std::to_string(r.nx) + "," + std::to_string(r.ny) + "," + std::to_string(r.nt) + "," +
             fmt(r.J) + "," + (r.certified ? "1" : "0") + "," + fmt(r.max_residual) + "," +
             fmt(r.gamma) + "," + fmt(r.configured_gamma) + "," + fmt(r.alpha_y) + "," +
             fmt(r.alpha_u) + "," + fmt(r.alpha_phi) + "," + fmt(r.alpha_e) + "," + fmt(r.kappa);
    } else {
      csv += ",,,,0,,,,,,,,";
    }
    csv += "," + status + "\n";
  }
  write_text(path_in(cfg.output_dir, "summary.csv"), csv);
  log.result("sweep: " + std::to_string(rows.size()) + " points" +
             (all_ok ? ", all certified" : ", some points failed") + " -> " +
             path_in(cfg.output_dir, "summary.csv"));
  return all_ok ? kCertified : kCheckFailed;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimal control of semilinear parabolic equations with mixed constraints: "
               "solve, certify and analyse"};
  app.name("parakkt");
  app.require_subcommand(1);
  Flags f;
  app.add_option("--config", f.config, "Run configuration (INI)");
  app.add_option("--out", f.out, "Output or solution directory");
  app.add_option("--seed", f.seed, "Seed for the sampling checks")->check(CLI::NonNegativeNumber);
  app.add_option("--jobs", f.jobs, "Parallel sweep points")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", f.quiet, "Only warnings and errors");

  CLI::App* solve = app.add_subcommand("solve", "Solve and write a solution directory");
  CLI::App* certify = app.add_subcommand("certify", "Re-check first-order conditions of a solution");
  CLI::App* soc = app.add_subcommand("soc", "Second-order and growth checks of a solution");
  CLI::App* regularity = app.add_subcommand("regularity", "Hölder estimates and maximum principle");
  CLI::App* sweep = app.add_subcommand("sweep", "Run the pipeline over a parameter grid");
  for (CLI::App* sub : {solve, certify, soc, regularity, sweep}) sub->fallthrough();
  for (CLI::App* sub : {certify, soc, regularity}) {
    sub->add_option("dir", f.dir, "Solution directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kUsage;
  }

  Log log(out, err, f.quiet);
  try {
    if (solve->parsed()) return cmd_solve(f, log);
    if (certify->parsed()) return cmd_certify(f, log);
    if (soc->parsed()) return cmd_soc(f, log);
    if (regularity->parsed()) return cmd_regularity(f, log);
    if (sweep->parsed()) return cmd_sweep(f, log);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    err << "input error: " << e.what() << '\n';
    return kUsage;
  } catch (const StageFailure& e) {
    err << e.what() << '\n';
    return kCheckFailed;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kCheckFailed;
  }
  return kUsage;
}

}  // namespace parakkt::cli
