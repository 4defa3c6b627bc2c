#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "parakkt/mesh.hpp"
#include "parakkt/optimize.hpp"
#include "parakkt/problem.hpp"
#include "parakkt/regularity.hpp"
#include "parakkt/soc.hpp"

namespace parakkt {

// INI-style run configuration. Grammar (see README):
//   - blank lines and lines whose first non-blank character is '#' or ';'
//     are ignored; " #" or " ;" after a value starts a trailing comment
//   - "[section]" opens a section; each section may appear once
//   - "key = value" inside a section; keys are unique within their section
//   - section and key names are [A-Za-z0-9_]+; values are non-empty
//   - lists are comma separated ("radii = 1e-2, 1e-3")
// Every error names its line.

struct IniEntry {
  std::string value;
  int line = 0;
};

class Ini {
 public:
  static Ini parse(const std::string& text);
  static Ini load(const std::string& path);

  const IniEntry* find(const std::string& section, const std::string& key) const;
  bool has_section(const std::string& section) const { return sections_.count(section) != 0; }
  int section_line(const std::string& section) const;
  const std::map<std::string, IniEntry>& section(const std::string& name) const;
  std::vector<std::string> section_names() const;

  /// Adds or replaces a value (line 0 marks it as not from the file).
  void set(const std::string& section, const std::string& key, const std::string& value);
  void erase_section(const std::string& section);

  /// Canonical text: sections and keys in sorted order.
  std::string to_string() const;

 private:
  std::map<std::string, std::map<std::string, IniEntry>> sections_;
  std::map<std::string, int> section_lines_;
};

struct ProblemConfig {
  std::string name = "cubic_example";  // or "convex_quadratic"
  std::map<std::string, double> params;
};

struct MeshConfig {
  int dim = 2;
  double lx = 1.0, ly = 1.0;
  int nx = 16, ny = 16, nt = 32;
  double T = 1.0;
};

struct VerificationConfig {
  double kkt_tol = 1e-6;
  double tol_act = -1.0;                       // < 0: 1e-8 (b - a)
  std::vector<double> robinson_rho{1e-2, 1e-3};
  int soc_samples = 200;
  int growth_samples = 100;
  std::vector<double> growth_radii{1e-2};
  double strong_tol = 1e-7;
  double soc_tol = 1e-6;
  double soc_margin = 0.0;
  long holder_pairs = 2000000;
  bool parabolic = true;
  double holder_min_distance = 0.0;
  double holder_max_distance = 0.0;
  double holder_bin_ratio = 1.4142135623730951;
  std::uint64_t seed = 1;  // soc uses seed, growth seed + 1, Hölder seed + 2
};

/// Sweep over one configuration key given as "section.key"; "mesh.n" sets
/// nx and (in 2D) ny together.
struct SweepConfig {
  std::string key;
  std::vector<std::string> values;
};

struct RunConfig {
  ProblemConfig problem;
  MeshConfig mesh;
  OptimizeParams optimizer;
  VerificationConfig verification;
  std::string output_dir = "out";
  std::optional<SweepConfig> sweep;
  Ini source;  // the parsed text with overrides applied

  /// Throws ConfigError with the offending line: unknown sections or keys,
  /// malformed numbers, unknown catalog names, invalid values (including
  /// problem data the catalog rejects, such as a >= b).
  static RunConfig from_ini(const Ini& ini);
  static RunConfig parse(const std::string& text) { return from_ini(Ini::parse(text)); }
  static RunConfig load(const std::string& path) { return from_ini(Ini::load(path)); }

  Mesh build_mesh() const;
  ProblemSpec build_problem() const;
  ProblemSpec build_problem(const Domain& domain, double horizon) const;
  SocOptions soc_options() const;
  HolderOptions holder_options() const;

  /// Re-parses with one "section.key" replaced (sweep points, CLI overrides).
  RunConfig with_override(const std::string& dotted_key, const std::string& value) const;
  RunConfig with_seed(std::uint64_t seed) const;
  RunConfig with_output_dir(const std::string& dir) const;
};

/// Problem parameter names accepted by a catalog entry (empty for unknown).
std::vector<std::string> catalog_parameters(const std::string& name);

}  // namespace parakkt
