#include "parakkt/config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "parakkt/error.hpp"
#include "parakkt/io.hpp"

namespace parakkt {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_name(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

double to_double(const IniEntry& e, const std::string& key) {
  const char* p = e.value.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(p, &end);
  if (end == p || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
    throw ConfigError(key + ": expected a finite number, got '" + e.value + "'", e.line);
  }
  return v;
}

long to_long(const IniEntry& e, const std::string& key) {
  const char* p = e.value.c_str();
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(p, &end, 10);
  if (end == p || *end != '\0' || errno == ERANGE) {
    throw ConfigError(key + ": expected an integer, got '" + e.value + "'", e.line);
  }
  return v;
}

int to_int(const IniEntry& e, const std::string& key) {
  const long v = to_long(e, key);
  if (v < -2147483647L || v > 2147483647L) throw ConfigError(key + ": out of range", e.line);
  return static_cast<int>(v);
}

bool to_bool(const IniEntry& e, const std::string& key) {
  if (e.value == "true" || e.value == "1" || e.value == "yes" || e.value == "on") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no" || e.value == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + e.value + "'", e.line);
}

std::vector<std::string> split_list(const IniEntry& e, const std::string& key) {
  std::vector<std::string> out;
  std::stringstream ss(e.value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError(key + ": empty list item", e.line);
    out.push_back(item);
  }
  if (out.empty()) throw ConfigError(key + ": empty list", e.line);
  return out;
}

std::vector<double> to_doubles(const IniEntry& e, const std::string& key) {
  std::vector<double> out;
  for (const std::string& s : split_list(e, key)) out.push_back(to_double({s, e.line}, key));
  return out;
}

// Reads one section through a table of setters; unknown keys are errors.
using Setter = std::function<void(const IniEntry&, const std::string&)>;

void read_section(const Ini& ini, const std::string& section,
                  const std::map<std::string, Setter>& table) {
  if (!ini.has_section(section)) return;
  for (const auto& [key, entry] : ini.section(section)) {
    const auto it = table.find(key);
    if (it == table.end()) {
      throw ConfigError("unknown key '" + key + "' in [" + section + "]", entry.line);
    }
    it->second(entry, section + "." + key);
  }
}

template <typename T>
Setter num(T& target) {
  return [&target](const IniEntry& e, const std::string& key) {
    if constexpr (std::is_same_v<T, double>) {
      target = to_double(e, key);
    } else if constexpr (std::is_same_v<T, int>) {
      target = to_int(e, key);
    } else {
      target = static_cast<T>(to_long(e, key));
    }
  };
}

const std::map<std::string, std::vector<std::string>>& catalog() {
  static const std::map<std::string, std::vector<std::string>> c{
      {"cubic_example",
       {"gamma", "b", "target", "control_weight", "initial_amplitude", "diffusion"}},
      {"convex_quadratic",
       {"target", "target_amplitude", "control_weight", "reaction", "g_slope", "g_offset", "eps",
        "a", "b", "initial_amplitude", "diffusion"}},
  };
  return c;
}

}  // namespace

Ini Ini::parse(const std::string& text) {
  Ini ini;
  std::istringstream in(text);
  std::string raw;
  std::string current;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s[0] == '[') {
      if (s.back() != ']') throw ConfigError("unterminated section header", line);
      current = trim(s.substr(1, s.size() - 2));
      if (!valid_name(current)) throw ConfigError("bad section name '" + current + "'", line);
      if (ini.sections_.count(current)) {
        throw ConfigError("section [" + current + "] appears twice", line);
      }
      ini.sections_[current];
      ini.section_lines_[current] = line;
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
    if (current.empty()) throw ConfigError("key outside of any section", line);
    const std::string key = trim(s.substr(0, eq));
    std::string value = s.substr(eq + 1);
    for (std::size_t i = 1; i < value.size(); ++i) {
      if ((value[i] == '#' || value[i] == ';') && (value[i - 1] == ' ' || value[i - 1] == '\t')) {
        value.resize(i);
        break;
      }
    }
    value = trim(value);
    if (!valid_name(key)) throw ConfigError("bad key '" + key + "'", line);
    if (value.empty()) throw ConfigError("empty value for '" + key + "'", line);
    auto& sec = ini.sections_[current];
    if (sec.count(key)) {
      throw ConfigError("key '" + key + "' repeated in [" + current + "]", line);
    }
    sec[key] = {value, line};
  }
  return ini;
}

Ini Ini::load(const std::string& path) {
  try {
    return parse(read_text(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what(), 0);
  }
}

const IniEntry* Ini::find(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  const auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

int Ini::section_line(const std::string& section) const {
  const auto it = section_lines_.find(section);
  return it == section_lines_.end() ? 0 : it->second;
}

const std::map<std::string, IniEntry>& Ini::section(const std::string& name) const {
  static const std::map<std::string, IniEntry> empty;
  const auto it = sections_.find(name);
  return it == sections_.end() ? empty : it->second;
}

std::vector<std::string> Ini::section_names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : sections_) out.push_back(name);
  return out;
}

void Ini::set(const std::string& section, const std::string& key, const std::string& value) {
  sections_[section][key] = {value, 0};
}

void Ini::erase_section(const std::string& section) {
  sections_.erase(section);
  section_lines_.erase(section);
}

std::string Ini::to_string() const {
  std::string s;
  for (const auto& [name, keys] : sections_) {
    if (!s.empty()) s += '\n';
    s += "[" + name + "]\n";
    for (const auto& [key, entry] : keys) s += key + " = " + entry.value + "\n";
  }
  return s;
}

std::vector<std::string> catalog_parameters(const std::string& name) {
  const auto it = catalog().find(name);
  return it == catalog().end() ? std::vector<std::string>{} : it->second;
}

RunConfig RunConfig::from_ini(const Ini& ini) {
  RunConfig rc;
  rc.source = ini;
  static const std::vector<std::string> known{"problem", "mesh", "optimizer", "verification",
                                              "output", "sweep"};
  for (const std::string& s : ini.section_names()) {
    if (std::find(known.begin(), known.end(), s) == known.end()) {
      throw ConfigError("unknown section [" + s + "]", ini.section_line(s));
    }
  }

  // [problem]
  if (const IniEntry* e = ini.find("problem", "name")) {
    rc.problem.name = e->value;
    if (!catalog().count(e->value)) {
      throw ConfigError("unknown problem '" + e->value +
                            "' (expected cubic_example or convex_quadratic)",
                        e->line);
    }
  }
  const std::vector<std::string> params = catalog_parameters(rc.problem.name);
  for (const auto& [key, entry] : ini.section("problem")) {
    if (key == "name") continue;
    if (std::find(params.begin(), params.end(), key) == params.end()) {
      throw ConfigError("parameter '" + key + "' is not used by " + rc.problem.name, entry.line);
    }
    rc.problem.params[key] = to_double(entry, "problem." + key);
  }

  // [mesh]
  MeshConfig& m = rc.mesh;
  read_section(ini, "mesh",
               {{"dim", num(m.dim)}, {"lx", num(m.lx)}, {"ly", num(m.ly)}, {"nx", num(m.nx)},
                {"ny", num(m.ny)}, {"nt", num(m.nt)}, {"T", num(m.T)}});
  if (m.dim == 1) {
    m.ny = 1;
    m.ly = 1.0;
  }
  try {
    rc.build_mesh();
  } catch (const Error& e) {
    throw ConfigError(std::string("[mesh]: ") + e.what(), ini.section_line("mesh"));
  }

  // [optimizer]
  OptimizeParams& o = rc.optimizer;
  read_section(ini, "optimizer",
               {{"c0", num(o.c0)},
                {"growth", num(o.growth)},
                {"stall_factor", num(o.stall_factor)},
                {"c_max", num(o.c_max)},
                {"damping", num(o.damping)},
                {"inner_tol", num(o.inner_tol)},
                {"stop_tol", num(o.stop_tol)},
                {"max_outer", num(o.max_outer)},
                {"max_inner", num(o.max_inner)},
                {"armijo_sigma", num(o.armijo_sigma)},
                {"backtrack", num(o.backtrack)},
                {"max_backtracks", num(o.max_backtracks)},
                {"armijo_slack", num(o.armijo_slack)},
                {"newton_tol", num(o.pde.newton_tol)},
                {"newton_max_iterations", num(o.pde.newton_max_iterations)},
                {"lin_tol", num(o.pde.lin_tol)},
                {"cg_max_iterations", num(o.pde.cg_max_iterations)}});

  // [verification]
  VerificationConfig& v = rc.verification;
  read_section(
      ini, "verification",
      {{"kkt_tol", num(v.kkt_tol)},
       {"tol_act", num(v.tol_act)},
       {"robinson_rho", [&](const IniEntry& e, const std::string& k) { v.robinson_rho = to_doubles(e, k); }},
       {"soc_samples", num(v.soc_samples)},
       {"growth_samples", num(v.growth_samples)},
       {"growth_radii", [&](const IniEntry& e, const std::string& k) { v.growth_radii = to_doubles(e, k); }},
       {"strong_tol", num(v.strong_tol)},
       {"soc_tol", num(v.soc_tol)},
       {"soc_margin", num(v.soc_margin)},
       {"holder_pairs", num(v.holder_pairs)},
       {"parabolic", [&](const IniEntry& e, const std::string& k) { v.parabolic = to_bool(e, k); }},
       {"holder_min_distance", num(v.holder_min_distance)},
       {"holder_max_distance", num(v.holder_max_distance)},
       {"holder_bin_ratio", num(v.holder_bin_ratio)},
       {"seed", [&](const IniEntry& e, const std::string& k) {
          const long s = to_long(e, k);
          if (s < 0) throw ConfigError(k + ": must be non-negative", e.line);
          v.seed = static_cast<std::uint64_t>(s);
        }}});
  o.kkt_tol = v.kkt_tol;
  o.tol_act = v.tol_act;

  // [output]
  read_section(ini, "output",
               {{"dir", [&](const IniEntry& e, const std::string&) { rc.output_dir = e.value; }}});

  // [sweep]
  if (ini.has_section("sweep")) {
    SweepConfig sw;
    read_section(ini, "sweep",
                 {{"key", [&](const IniEntry& e, const std::string&) { sw.key = e.value; }},
                  {"values", [&](const IniEntry& e, const std::string& k) {
                     sw.values = split_list(e, k);
                   }}});
    if (sw.key.empty() || sw.values.empty()) {
      throw ConfigError("[sweep] needs both 'key' and 'values'", ini.section_line("sweep"));
    }
    const auto dot = sw.key.find('.');
    if (dot == std::string::npos || sw.key.substr(0, dot) == "sweep") {
      throw ConfigError("sweep key must look like section.key", ini.find("sweep", "key")->line);
    }
    rc.sweep = sw;
  }

  // Range checks that do not belong to any library type.
  auto vline = [&](const char* key) {
    const IniEntry* e = ini.find("verification", key);
    return e ? e->line : ini.section_line("verification");
  };
  if (!(v.kkt_tol > 0.0)) throw ConfigError("kkt_tol must be positive", vline("kkt_tol"));
  if (v.soc_samples < 1) throw ConfigError("soc_samples must be >= 1", vline("soc_samples"));
  if (v.growth_samples < 1) {
    throw ConfigError("growth_samples must be >= 1", vline("growth_samples"));
  }
  if (v.holder_pairs < 100) throw ConfigError("holder_pairs must be >= 100", vline("holder_pairs"));
  if (!(v.holder_bin_ratio > 1.0)) {
    throw ConfigError("holder_bin_ratio must exceed 1", vline("holder_bin_ratio"));
  }
  for (double r : v.robinson_rho) {
    if (!(r > 0.0)) throw ConfigError("robinson_rho entries must be positive", vline("robinson_rho"));
  }
  for (double r : v.growth_radii) {
    if (!(r > 0.0)) throw ConfigError("growth_radii entries must be positive", vline("growth_radii"));
  }
  if (!(v.strong_tol > 0.0) || !(v.soc_tol > 0.0)) {
    throw ConfigError("strong_tol and soc_tol must be positive", ini.section_line("verification"));
  }
  try {
    o.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("[optimizer]: ") + e.what(), ini.section_line("optimizer"));
  }

  // Let the catalog reject bad problem data now rather than at solve time.
  const IniEntry* a = ini.find("problem", "a");
  const IniEntry* b = ini.find("problem", "b");
  try {
    rc.build_problem();
  } catch (const InvalidArgument& e) {
    const int line = b ? b->line : a ? a->line : ini.section_line("problem");
    throw ConfigError(std::string("[problem]: ") + e.what(), line);
  }
  return rc;
}

Mesh RunConfig::build_mesh() const {
  return Mesh::build(mesh.dim, mesh.lx, mesh.ly, mesh.nx, mesh.dim == 1 ? 1 : mesh.ny, mesh.T,
                     mesh.nt);
}

ProblemSpec RunConfig::build_problem() const {
  return build_problem(Domain{mesh.dim, mesh.lx, mesh.ly}, mesh.T);
}

ProblemSpec RunConfig::build_problem(const Domain& domain, double horizon) const {
  auto get = [&](const char* key, double fallback) {
    const auto it = problem.params.find(key);
    return it == problem.params.end() ? fallback : it->second;
  };
  if (problem.name == "cubic_example") {
    CubicExampleParams p;
    p.gamma = get("gamma", p.gamma);
    p.b = get("b", p.b);
    p.target = get("target", p.target);
    p.control_weight = get("control_weight", p.control_weight);
    p.initial_amplitude = get("initial_amplitude", p.initial_amplitude);
    p.diffusion = get("diffusion", p.diffusion);
    return make_example_cubic(p, domain, horizon);
  }
  if (problem.name == "convex_quadratic") {
    ConvexQuadraticParams p;
    p.target = get("target", p.target);
    p.target_amplitude = get("target_amplitude", p.target_amplitude);
    p.control_weight = get("control_weight", p.control_weight);
    p.reaction = get("reaction", p.reaction);
    p.g_slope = get("g_slope", p.g_slope);
    p.g_offset = get("g_offset", p.g_offset);
    p.eps = get("eps", p.eps);
    p.a = get("a", p.a);
    p.b = get("b", p.b);
    p.initial_amplitude = get("initial_amplitude", p.initial_amplitude);
    p.diffusion = get("diffusion", p.diffusion);
    return make_convex_quadratic(p, domain, horizon);
  }
  throw InvalidArgument("unknown problem " + problem.name);
}

SocOptions RunConfig::soc_options() const {
  SocOptions s;
  s.strong_tol = verification.strong_tol;
  s.soc_tol = verification.soc_tol;
  s.soc_margin = verification.soc_margin;
  s.pde = optimizer.pde;
  return s;
}

HolderOptions RunConfig::holder_options() const {
  HolderOptions h;
  h.n_pairs = verification.holder_pairs;
  h.seed = verification.seed + 2;
  h.parabolic = verification.parabolic;
  h.min_distance = verification.holder_min_distance;
  h.max_distance = verification.holder_max_distance;
  h.bin_ratio = verification.holder_bin_ratio;
  return h;
}

RunConfig RunConfig::with_override(const std::string& dotted_key, const std::string& value) const {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos) throw ConfigError("override key must be section.key", 0);
  const std::string section = dotted_key.substr(0, dot), key = dotted_key.substr(dot + 1);
  Ini ini = source;
  if (section == "mesh" && key == "n") {
    ini.set("mesh", "nx", value);
    if (mesh.dim == 2) ini.set("mesh", "ny", value);
  } else {
    ini.set(section, key, value);
  }
  try {
    return from_ini(ini);
  } catch (const ConfigError& e) {
    throw ConfigError(dotted_key + " = " + value + ": " + e.what(), 0);
  }
}

RunConfig RunConfig::with_seed(std::uint64_t seed) const {
  return with_override("verification.seed", std::to_string(seed));
}

RunConfig RunConfig::with_output_dir(const std::string& dir) const {
  return with_override("output.dir", dir);
}

}  // namespace parakkt
