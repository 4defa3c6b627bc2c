#pragma once

#include <Eigen/Core>

#include "parakkt/mesh.hpp"

namespace parakkt {

/// The matrix of one implicit-Euler step, I + dt*(A + diag(c)).
class StepOperator {
 public:
  StepOperator(const EllipticOperator& op, double dt, const Eigen::VectorXd& c)
      : op_(op), dt_(dt), c_(c) {}

  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
    out.noalias() = op_.matrix() * x;
    out = x + dt_ * (out + c_.cwiseProduct(x));
  }
  Eigen::VectorXd diagonal() const {
    return (1.0 + dt_ * (op_.diagonal() + c_).array()).matrix();
  }
  int size() const { return op_.size(); }

 private:
  const EllipticOperator& op_;
  double dt_;
  const Eigen::VectorXd& c_;
};

struct CgResult {
  int iterations = 0;
  double residual = 0.0;  // final ||b - Mx|| / ||b||
  bool converged = false;
  bool breakdown = false;  // p^T M p <= 0 encountered
};

/// Jacobi-preconditioned conjugate gradients; `x` is the initial guess on
/// entry. Converged when ||b - Mx||_2 <= rel_tol * ||b||_2.
CgResult solve_pcg(const StepOperator& m, const Eigen::VectorXd& b,
                   Eigen::VectorXd& x, double rel_tol, int max_iterations);

}  // namespace parakkt
