#pragma once

#include <functional>

#include <Eigen/Core>

#include "parakkt/mesh.hpp"

namespace parakkt {

/// Scalar grid function on interior nodes x time levels 0..nt, stored level by
/// level. Holds states, controls, adjoints, multipliers and directions alike.
/// For Q-quantities (controls, multipliers, constraint values) level 0 is
/// unused and kept at zero.
class Field {
 public:
  Field() = default;
  Field(int num_nodes, int num_levels, double value = 0.0);

  static Field zeros(const Mesh& mesh) { return constant(mesh, 0.0); }
  static Field constant(const Mesh& mesh, double value);
  /// Samples `fn` at every node of every level 0..nt.
  static Field sample(const Mesh& mesh, const std::function<double(const Point&)>& fn);
  /// Samples `fn` on levels 1..nt; level 0 is zero.
  static Field sample_q(const Mesh& mesh, const std::function<double(const Point&)>& fn);

  int num_nodes() const { return num_nodes_; }
  int num_levels() const { return num_levels_; }
  bool empty() const { return data_.size() == 0; }

  double& operator()(int level, int node) {
    return data_[static_cast<Eigen::Index>(level) * num_nodes_ + node];
  }
  double operator()(int level, int node) const {
    return data_[static_cast<Eigen::Index>(level) * num_nodes_ + node];
  }

  auto level(int n) { return data_.segment(static_cast<Eigen::Index>(n) * num_nodes_, num_nodes_); }
  auto level(int n) const {
    return data_.segment(static_cast<Eigen::Index>(n) * num_nodes_, num_nodes_);
  }

  Eigen::VectorXd& values() { return data_; }
  const Eigen::VectorXd& values() const { return data_; }

  bool matches(const Mesh& mesh) const {
    return num_nodes_ == mesh.num_nodes() && num_levels_ == mesh.num_levels();
  }
  bool all_finite() const { return data_.allFinite(); }

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(double s);

 private:
  int num_nodes_ = 0;
  int num_levels_ = 0;
  Eigen::VectorXd data_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

/// Throws InvalidArgument when `f` does not match `mesh` (`what` names it).
void require_matches(const Field& f, const Mesh& mesh, const char* what);

// Discrete norms over Q (levels 1..nt) with the mesh quadrature:
// sum_n dt * sum_k w_k f(n,k) g(n,k).
double inner_q(const Mesh& mesh, const Field& f, const Field& g);
double l2_q(const Mesh& mesh, const Field& f);
double max_abs_q(const Field& f);
double max_q(const Field& f);
double min_q(const Field& f);

}  // namespace parakkt
