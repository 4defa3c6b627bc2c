#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "parakkt/field.hpp"
#include "parakkt/mesh.hpp"
#include "parakkt/optimize.hpp"

namespace parakkt {

// Field files carry their grid, so a field can be read back without any
// other input.
//
// CSV layout:
//   # parakkt field
//   # name=u dim=2 nx=16 ny=16 nt=32 lx=1 ly=1 T=1 hx=... hy=... dt=...
//   v(0,0),v(0,1),...        one row per time level 0..nt, nodes row-major
// Values use %.17g, so a write/read cycle is exact.
//
// Binary layout (little endian): "PKFD", int32 version (1), int32 dim, nx,
// ny, nt, float64 lx, ly, T, int32 name length, name bytes, then
// (nt + 1) * nx * ny float64 values level by level.

struct FieldFile {
  std::string name;
  Mesh mesh;
  Field field;
};

void write_field_csv(const std::string& path, const std::string& name, const Mesh& mesh,
                     const Field& field);
FieldFile read_field_csv(const std::string& path);

void write_field_binary(const std::string& path, const std::string& name, const Mesh& mesh,
                        const Field& field);
FieldFile read_field_binary(const std::string& path);

/// Picks the reader from the extension (".bin" is binary, anything else CSV).
FieldFile read_field(const std::string& path);

/// Writes text to a file, replacing it; throws IoError.
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

/// Pretty-printed with a trailing newline. Deterministic for equal input.
void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

/// Columns: outer,inner_iterations,J,feasibility,stationarity,max_residual,penalty
std::string history_csv(const std::vector<HistoryEntry>& history);

/// Names of the field files of a solution directory.
const std::vector<std::string>& solution_field_names();

/// Writes u, y, phi, e, ehat as <name>.csv, plus history.csv. The report and
/// config are written by the caller (they depend on what was run).
void write_solution_fields(const std::string& dir, const Mesh& mesh, const Solution& sol);

struct LoadedSolution {
  Mesh mesh;
  Field u, y, phi, e, ehat;
};

/// Reads the five field files back; all must exist and share one grid.
/// Throws IoError listing every missing file at once.
LoadedSolution read_solution_fields(const std::string& dir);

}  // namespace parakkt
