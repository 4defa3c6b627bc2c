#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace parakkt {

/// A point of the space-time cylinder. In 1D only x[0] is meaningful.
struct Point {
  std::array<double, 2> x{0.0, 0.0};
  double t = 0.0;
};

/// Spatial domain descriptor: the interval (0, lx) or the rectangle
/// (0, lx) x (0, ly).
struct Domain {
  int dim = 1;
  double lx = 1.0;
  double ly = 1.0;
};

/// Structured space-time grid of Q = Omega x (0, T) for a rectangle (N=2) or
/// an interval (N=1). Boundary nodes carry homogeneous Dirichlet data and are
/// not unknowns; interior nodes are numbered row-major (x fastest).
///
/// Time levels are t_n = n*dt, n = 0..nt. Level 0 holds initial data; the
/// levels 1..nt are the nodes of Q on which controls, constraints and
/// multipliers live.
class Mesh {
 public:
  /// Throws UnsupportedDimension for dim outside {1, 2} and InvalidArgument
  /// for non-positive sizes or fewer than two interior nodes per axis.
  static Mesh build(int dim, double lx, double ly, int nx, int ny, double T,
                    int nt);
  static Mesh build_1d(double lx, int nx, double T, int nt) {
    return build(1, lx, 1.0, nx, 1, T, nt);
  }
  static Mesh build_2d(double lx, double ly, int nx, int ny, double T, int nt) {
    return build(2, lx, ly, nx, ny, T, nt);
  }

  int dim() const { return dim_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nt() const { return nt_; }
  double lx() const { return lx_; }
  double ly() const { return ly_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  double T() const { return T_; }
  double dt() const { return T_ / nt_; }

  /// Interior unknowns per time level.
  int num_nodes() const { return nx_ * ny_; }
  int num_levels() const { return nt_ + 1; }

  int index(int i, int j) const { return j * nx_ + i; }
  std::array<int, 2> grid_index(int node) const {
    return {node % nx_, node / nx_};
  }
  std::array<double, 2> coords(int node) const;
  double time(int level) const { return level * dt(); }
  Point point(int level, int node) const { return {coords(node), time(level)}; }

  /// Spatial quadrature weight of an interior node: hx*hy, where the first and
  /// last interior node of each axis additionally absorb the half cell next
  /// to the boundary (factor 3/2). The weights sum to |Omega| exactly.
  double weight(int node) const;
  const Eigen::VectorXd& weights() const { return weights_; }
  double measure() const { return dim_ == 1 ? lx_ : lx_ * ly_; }

  /// Grid points on the boundary (used to validate Dirichlet data).
  std::vector<std::array<double, 2>> boundary_points() const;

  Domain domain() const { return {dim_, lx_, ly_}; }
  bool same_grid(const Mesh& other) const;
  std::string describe() const;

 private:
  Mesh() = default;

  int dim_ = 1;
  int nx_ = 0;
  int ny_ = 1;
  int nt_ = 0;
  double lx_ = 1.0;
  double ly_ = 1.0;
  double hx_ = 0.0;
  double hy_ = 1.0;
  double T_ = 0.0;
  Eigen::VectorXd weights_;
};

/// Scalar diffusion coefficient a(x) > 0; the operator is
/// A y = -div(a(x) grad y), i.e. a_ij = a(x) delta_ij.
struct Diffusion {
  std::string name = "constant";
  std::function<double(const std::array<double, 2>&)> coefficient;

  static Diffusion constant(double value);
};

/// Discrete -div(a grad .) on interior nodes with homogeneous Dirichlet
/// boundary: 3-point (1D) / 5-point (2D) stencil, face coefficients taken as
/// the arithmetic mean of the nodal values. Symmetric positive definite and
/// an M-matrix whenever a > 0.
class EllipticOperator {
 public:
  using Matrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  EllipticOperator(Mesh mesh, Matrix matrix, Diffusion diffusion,
                   double min_coefficient);

  const Mesh& mesh() const { return mesh_; }
  const Matrix& matrix() const { return matrix_; }
  const Eigen::VectorXd& diagonal() const { return diagonal_; }
  const Diffusion& diffusion() const { return diffusion_; }
  double min_coefficient() const { return min_coefficient_; }
  int size() const { return static_cast<int>(matrix_.rows()); }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const { return matrix_ * v; }

  /// Lower bound on the smallest eigenvalue from Gershgorin discs.
  double gershgorin_lower_bound() const;

 private:
  Mesh mesh_;
  Matrix matrix_;
  Eigen::VectorXd diagonal_;
  Diffusion diffusion_;
  double min_coefficient_;
};

/// Throws InvalidArgument when a(x) <= 0 (or is not finite) at any node,
/// boundary nodes included.
EllipticOperator assemble_elliptic(const Mesh& mesh, const Diffusion& diffusion);

}  // namespace parakkt
