#include "parakkt/mesh.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "parakkt/error.hpp"

namespace parakkt {

Mesh Mesh::build(int dim, double lx, double ly, int nx, int ny, double T,
                 int nt) {
  if (dim != 1 && dim != 2) throw UnsupportedDimension(dim);
  if (!(lx > 0.0) || !(T > 0.0) || (dim == 2 && !(ly > 0.0))) {
    throw InvalidArgument("mesh lengths and horizon must be positive");
  }
  if (nx < 2 || (dim == 2 && ny < 2)) {
    throw InvalidArgument("mesh needs at least 2 interior nodes per axis");
  }
  if (nt < 1) throw InvalidArgument("mesh needs at least one time step");

  Mesh m;
  m.dim_ = dim;
  m.nx_ = nx;
  m.ny_ = dim == 2 ? ny : 1;
  m.nt_ = nt;
  m.lx_ = lx;
  m.ly_ = dim == 2 ? ly : 1.0;
  m.hx_ = lx / (nx + 1);
  m.hy_ = dim == 2 ? ly / (ny + 1) : 1.0;
  m.T_ = T;

  auto axis_weight = [](int i, int n, double h) {
    return (i == 0 || i == n - 1) ? 1.5 * h : h;
  };
  m.weights_.resize(m.num_nodes());
  for (int node = 0; node < m.num_nodes(); ++node) {
    const auto [i, j] = m.grid_index(node);
    double w = axis_weight(i, m.nx_, m.hx_);
    if (dim == 2) w *= axis_weight(j, m.ny_, m.hy_);
    m.weights_[node] = w;
  }
  return m;
}

std::array<double, 2> Mesh::coords(int node) const {
  const auto [i, j] = grid_index(node);
  return {(i + 1) * hx_, dim_ == 2 ? (j + 1) * hy_ : 0.0};
}

double Mesh::weight(int node) const { return weights_[node]; }

std::vector<std::array<double, 2>> Mesh::boundary_points() const {
  std::vector<std::array<double, 2>> pts;
  if (dim_ == 1) {
    pts.push_back({0.0, 0.0});
    pts.push_back({lx_, 0.0});
    return pts;
  }
  for (int i = 0; i <= nx_ + 1; ++i) {
    pts.push_back({i * hx_, 0.0});
    pts.push_back({i * hx_, ly_});
  }
  for (int j = 1; j <= ny_; ++j) {
    pts.push_back({0.0, j * hy_});
    pts.push_back({lx_, j * hy_});
  }
  return pts;
}

bool Mesh::same_grid(const Mesh& o) const {
  return dim_ == o.dim_ && nx_ == o.nx_ && ny_ == o.ny_ && nt_ == o.nt_ &&
         lx_ == o.lx_ && ly_ == o.ly_ && T_ == o.T_;
}

std::string Mesh::describe() const {
  std::ostringstream os;
  os << "dim=" << dim_ << " nx=" << nx_ << " ny=" << ny_ << " nt=" << nt_
     << " lx=" << lx_ << " ly=" << ly_ << " T=" << T_;
  return os.str();
}

Diffusion Diffusion::constant(double value) {
  Diffusion d;
  d.name = "constant";
  d.coefficient = [value](const std::array<double, 2>&) { return value; };
  return d;
}

EllipticOperator::EllipticOperator(Mesh mesh, Matrix matrix,
                                   Diffusion diffusion, double min_coefficient)
    : mesh_(std::move(mesh)),
      matrix_(std::move(matrix)),
      diffusion_(std::move(diffusion)),
      min_coefficient_(min_coefficient) {
  diagonal_ = matrix_.diagonal();
}

double EllipticOperator::gershgorin_lower_bound() const {
  double bound = std::numeric_limits<double>::infinity();
  for (int r = 0; r < matrix_.outerSize(); ++r) {
    double diag = 0.0, off = 0.0;
    for (Matrix::InnerIterator it(matrix_, r); it; ++it) {
      if (it.col() == r) {
        diag = it.value();
      } else {
        off += std::abs(it.value());
      }
    }
    bound = std::min(bound, diag - off);
  }
  return bound;
}

EllipticOperator assemble_elliptic(const Mesh& mesh,
                                   const Diffusion& diffusion) {
  if (!diffusion.coefficient) {
    throw InvalidArgument("diffusion coefficient callback is empty");
  }
  const int nx = mesh.nx();
  const int ny = mesh.ny();
  const double hx = mesh.hx();
  const double hy = mesh.hy();

  // Nodal coefficient on the full grid including boundary nodes.
  const int gx = nx + 2;
  const int gy = mesh.dim() == 2 ? ny + 2 : 1;
  std::vector<double> a(static_cast<size_t>(gx) * gy);
  double amin = std::numeric_limits<double>::infinity();
  for (int j = 0; j < gy; ++j) {
    for (int i = 0; i < gx; ++i) {
      const std::array<double, 2> x{i * hx, mesh.dim() == 2 ? j * hy : 0.0};
      const double v = diffusion.coefficient(x);
      if (!std::isfinite(v) || !(v > 0.0)) {
        std::ostringstream os;
        os << "diffusion coefficient must be positive, got " << v << " at ("
           << x[0] << ", " << x[1] << ")";
        throw InvalidArgument(os.str());
      }
      a[static_cast<size_t>(j) * gx + i] = v;
      amin = std::min(amin, v);
    }
  }
  auto nodal = [&](int i, int j) { return a[static_cast<size_t>(j) * gx + i]; };

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(mesh.num_nodes()) * (mesh.dim() == 2 ? 5 : 3));
  for (int node = 0; node < mesh.num_nodes(); ++node) {
    const auto [ii, jj] = mesh.grid_index(node);
    const int gi = ii + 1;
    const int gj = mesh.dim() == 2 ? jj + 1 : 0;
    const double ac = nodal(gi, gj);
    double diag = 0.0;

    auto face = [&](int ni, int nj, double h2, int neighbour_node) {
      const double af = 0.5 * (ac + nodal(ni, nj));
      diag += af / h2;
      if (neighbour_node >= 0) trips.emplace_back(node, neighbour_node, -af / h2);
    };
    const double hx2 = hx * hx;
    face(gi - 1, gj, hx2, ii > 0 ? mesh.index(ii - 1, jj) : -1);
    face(gi + 1, gj, hx2, ii < nx - 1 ? mesh.index(ii + 1, jj) : -1);
    if (mesh.dim() == 2) {
      const double hy2 = hy * hy;
      face(gi, gj - 1, hy2, jj > 0 ? mesh.index(ii, jj - 1) : -1);
      face(gi, gj + 1, hy2, jj < ny - 1 ? mesh.index(ii, jj + 1) : -1);
    }
    trips.emplace_back(node, node, diag);
  }
  EllipticOperator::Matrix matrix(mesh.num_nodes(), mesh.num_nodes());
  matrix.setFromTriplets(trips.begin(), trips.end());
  matrix.makeCompressed();
  return EllipticOperator(mesh, std::move(matrix), diffusion, amin);
}

}  // namespace parakkt
