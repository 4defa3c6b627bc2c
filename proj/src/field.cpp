#include "parakkt/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "parakkt/error.hpp"

namespace parakkt {

Field::Field(int num_nodes, int num_levels, double value)
    : num_nodes_(num_nodes),
      num_levels_(num_levels),
      data_(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(num_nodes) * num_levels, value)) {}

Field Field::constant(const Mesh& mesh, double value) {
  return Field(mesh.num_nodes(), mesh.num_levels(), value);
}

Field Field::sample(const Mesh& mesh, const std::function<double(const Point&)>& fn) {
  Field f(mesh.num_nodes(), mesh.num_levels());
  for (int n = 0; n < mesh.num_levels(); ++n) {
    for (int k = 0; k < mesh.num_nodes(); ++k) f(n, k) = fn(mesh.point(n, k));
  }
  return f;
}

Field Field::sample_q(const Mesh& mesh, const std::function<double(const Point&)>& fn) {
  Field f(mesh.num_nodes(), mesh.num_levels());
  for (int n = 1; n < mesh.num_levels(); ++n) {
    for (int k = 0; k < mesh.num_nodes(); ++k) f(n, k) = fn(mesh.point(n, k));
  }
  return f;
}

static void check_same_shape(const Field& a, const Field& b) {
  if (a.num_nodes() != b.num_nodes() || a.num_levels() != b.num_levels()) {
    throw InvalidArgument("field shapes differ");
  }
}

Field& Field::operator+=(const Field& o) {
  check_same_shape(*this, o);
  data_ += o.data_;
  return *this;
}

Field& Field::operator-=(const Field& o) {
  check_same_shape(*this, o);
  data_ -= o.data_;
  return *this;
}

Field& Field::operator*=(double s) {
  data_ *= s;
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

void require_matches(const Field& f, const Mesh& mesh, const char* what) {
  if (!f.matches(mesh)) {
    throw InvalidArgument(std::string(what) + " does not match the mesh (" +
                          mesh.describe() + ")");
  }
}

double inner_q(const Mesh& mesh, const Field& f, const Field& g) {
  require_matches(f, mesh, "field");
  require_matches(g, mesh, "field");
  double s = 0.0;
  for (int n = 1; n < mesh.num_levels(); ++n) {
    s += (f.level(n).array() * g.level(n).array() * mesh.weights().array()).sum();
  }
  return s * mesh.dt();
}

double l2_q(const Mesh& mesh, const Field& f) { return std::sqrt(inner_q(mesh, f, f)); }

double max_abs_q(const Field& f) {
  double m = 0.0;
  for (int n = 1; n < f.num_levels(); ++n) m = std::max(m, f.level(n).cwiseAbs().maxCoeff());
  return m;
}

double max_q(const Field& f) {
  double m = -std::numeric_limits<double>::infinity();
  for (int n = 1; n < f.num_levels(); ++n) m = std::max(m, f.level(n).maxCoeff());
  return m;
}

double min_q(const Field& f) {
  double m = std::numeric_limits<double>::infinity();
  for (int n = 1; n < f.num_levels(); ++n) m = std::min(m, f.level(n).minCoeff());
  return m;
}

}  // namespace parakkt
