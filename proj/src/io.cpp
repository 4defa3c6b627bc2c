#include "parakkt/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "parakkt/error.hpp"

namespace parakkt {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_grid(const Mesh& mesh, const Field& field, const std::string& path) {
  if (!field.matches(mesh)) throw IoError(path + ": field does not match its grid");
}

Mesh mesh_from_header(const std::map<std::string, std::string>& kv, const std::string& path) {
  auto num = [&](const char* key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw IoError(path + ": header lacks '" + key + "'");
    char* end = nullptr;
    const double v = std::strtod(it->second.c_str(), &end);
    if (end == it->second.c_str() || *end != '\0') {
      throw IoError(path + ": bad header value " + key + "=" + it->second);
    }
    return v;
  };
  try {
    return Mesh::build(static_cast<int>(num("dim")), num("lx"), num("ly"),
                       static_cast<int>(num("nx")), static_cast<int>(num("ny")), num("T"),
                       static_cast<int>(num("nt")));
  } catch (const Error& e) {
    throw IoError(path + ": bad grid in header: " + e.what());
  }
}

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw IoError(path + ": truncated file");
  return v;
}

}  // namespace

void write_field_csv(const std::string& path, const std::string& name, const Mesh& mesh,
                     const Field& field) {
  check_grid(mesh, field, path);
  std::string s = "# parakkt field\n";
  s += "# name=" + name + " dim=" + std::to_string(mesh.dim()) +
       " nx=" + std::to_string(mesh.nx()) + " ny=" + std::to_string(mesh.ny()) +
       " nt=" + std::to_string(mesh.nt()) + " lx=" + fmt(mesh.lx()) + " ly=" + fmt(mesh.ly()) +
       " T=" + fmt(mesh.T()) + " hx=" + fmt(mesh.hx()) + " hy=" + fmt(mesh.hy()) +
       " dt=" + fmt(mesh.dt()) + "\n";
  for (int n = 0; n < field.num_levels(); ++n) {
    for (int k = 0; k < field.num_nodes(); ++k) {
      if (k) s += ',';
      s += fmt(field(n, k));
    }
    s += '\n';
  }
  write_text(path, s);
}

FieldFile read_field_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# parakkt field", 0) != 0) {
    throw IoError(path + ": not a field file (missing '# parakkt field' line)");
  }
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
    throw IoError(path + ": missing grid header");
  }
  std::map<std::string, std::string> kv;
  std::istringstream hs(line.substr(2));
  std::string tok;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw IoError(path + ": bad header token '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  Mesh mesh = mesh_from_header(kv, path);
  Field field = Field::zeros(mesh);
  int n = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (n >= field.num_levels()) throw IoError(path + ": more rows than time levels");
    const char* p = line.c_str();
    for (int k = 0; k < field.num_nodes(); ++k) {
      char* end = nullptr;
      field(n, k) = std::strtod(p, &end);
      if (end == p) {
        throw IoError(path + ": row " + std::to_string(n) + " has a bad value at column " +
                      std::to_string(k));
      }
      p = end;
      if (k + 1 < field.num_nodes()) {
        if (*p != ',') throw IoError(path + ": row " + std::to_string(n) + " is too short");
        ++p;
      }
    }
    while (*p == ' ' || *p == '\r') ++p;
    if (*p != '\0') throw IoError(path + ": row " + std::to_string(n) + " is too long");
    ++n;
  }
  if (n != field.num_levels()) {
    throw IoError(path + ": expected " + std::to_string(field.num_levels()) + " rows, found " +
                  std::to_string(n));
  }
  return {kv.count("name") ? kv["name"] : std::string(), std::move(mesh), std::move(field)};
}

void write_field_binary(const std::string& path, const std::string& name, const Mesh& mesh,
                        const Field& field) {
  check_grid(mesh, field, path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write("PKFD", 4);
  put<int32_t>(out, 1);
  put<int32_t>(out, mesh.dim());
  put<int32_t>(out, mesh.nx());
  put<int32_t>(out, mesh.ny());
  put<int32_t>(out, mesh.nt());
  put<double>(out, mesh.lx());
  put<double>(out, mesh.ly());
  put<double>(out, mesh.T());
  put<int32_t>(out, static_cast<int32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  out.write(reinterpret_cast<const char*>(field.values().data()),
            static_cast<std::streamsize>(field.values().size() * sizeof(double)));
  if (!out) throw IoError("write failed: " + path);
}

FieldFile read_field_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "PKFD", 4) != 0) throw IoError(path + ": bad magic");
  if (get<int32_t>(in, path) != 1) throw IoError(path + ": unsupported version");
  const int dim = get<int32_t>(in, path), nx = get<int32_t>(in, path);
  const int ny = get<int32_t>(in, path), nt = get<int32_t>(in, path);
  const double lx = get<double>(in, path), ly = get<double>(in, path), T = get<double>(in, path);
  const int32_t len = get<int32_t>(in, path);
  if (len < 0 || len > 4096) throw IoError(path + ": bad name length");
  std::string name(static_cast<std::size_t>(len), '\0');
  in.read(name.data(), len);
  Mesh mesh = [&] {
    try {
      return Mesh::build(dim, lx, ly, nx, ny, T, nt);
    } catch (const Error& e) {
      throw IoError(path + ": bad grid: " + e.what());
    }
  }();
  Field field = Field::zeros(mesh);
  in.read(reinterpret_cast<char*>(field.values().data()),
          static_cast<std::streamsize>(field.values().size() * sizeof(double)));
  if (!in) throw IoError(path + ": truncated data");
  if (in.peek() != std::ifstream::traits_type::eof()) throw IoError(path + ": trailing bytes");
  return {std::move(name), std::move(mesh), std::move(field)};
}

FieldFile read_field(const std::string& path) {
  return fs::path(path).extension() == ".bin" ? read_field_binary(path) : read_field_csv(path);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const std::string& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
}

std::string history_csv(const std::vector<HistoryEntry>& history) {
  std::string s = "outer,inner_iterations,J,feasibility,stationarity,max_residual,penalty\n";
  for (const HistoryEntry& h : history) {
    s += std::to_string(h.outer) + "," + std::to_string(h.inner_iterations) + "," + fmt(h.J) +
         "," + fmt(h.feasibility) + "," + fmt(h.stationarity) + "," + fmt(h.max_residual) + "," +
         fmt(h.penalty) + "\n";
  }
  return s;
}

const std::vector<std::string>& solution_field_names() {
  static const std::vector<std::string> names{"u", "y", "phi", "e", "ehat"};
  return names;
}

void write_solution_fields(const std::string& dir, const Mesh& mesh, const Solution& sol) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  const Field* fields[] = {&sol.u, &sol.y, &sol.phi, &sol.e, &sol.ehat};
  for (std::size_t i = 0; i < 5; ++i) {
    const std::string& name = solution_field_names()[i];
    write_field_csv((fs::path(dir) / (name + ".csv")).string(), name, mesh, *fields[i]);
  }
  write_text((fs::path(dir) / "history.csv").string(), history_csv(sol.history));
}

LoadedSolution read_solution_fields(const std::string& dir) {
  std::vector<std::string> missing;
  for (const std::string& name : solution_field_names()) {
    if (!fs::exists(fs::path(dir) / (name + ".csv"))) missing.push_back(name + ".csv");
  }
  if (!missing.empty()) {
    std::string list;
    for (const std::string& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw IoError(dir + " is missing " + list);
  }
  std::vector<FieldFile> files;
  for (const std::string& name : solution_field_names()) {
    files.push_back(read_field_csv((fs::path(dir) / (name + ".csv")).string()));
    if (!files.back().mesh.same_grid(files.front().mesh)) {
      throw IoError(dir + ": " + name + ".csv is on a different grid than u.csv");
    }
  }
  return {files[0].mesh, std::move(files[0].field), std::move(files[1].field),
          std::move(files[2].field), std::move(files[3].field), std::move(files[4].field)};
}

}  // namespace parakkt
