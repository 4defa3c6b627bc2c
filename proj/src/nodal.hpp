#pragma once

#include <cmath>

#include "parakkt/error.hpp"
#include "parakkt/field.hpp"
#include "parakkt/mesh.hpp"

namespace parakkt::detail {

// fn(point, level, node) on levels 1..nt; level 0 stays zero.
template <class Fn>
Field nodal_q(const Mesh& mesh, const char* what, Fn&& fn) {
  Field out = Field::zeros(mesh);
  for (int n = 1; n <= mesh.nt(); ++n) {
    for (int k = 0; k < mesh.num_nodes(); ++k) {
      const double v = fn(mesh.point(n, k), n, k);
      if (!std::isfinite(v)) throw NonFiniteValue(what, n, k);
      out(n, k) = v;
    }
  }
  return out;
}

inline std::size_t flat(const Mesh& mesh, int level, int node) {
  return static_cast<std::size_t>(level) * mesh.num_nodes() + node;
}

}  // namespace parakkt::detail
