#include "parakkt/linalg.hpp"

#include <cmath>

namespace parakkt {

CgResult solve_pcg(const StepOperator& m, const Eigen::VectorXd& b,
                   Eigen::VectorXd& x, double rel_tol, int max_iterations) {
  CgResult res;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    res.converged = true;
    return res;
  }
  const Eigen::VectorXd inv_diag = m.diagonal().cwiseInverse();

  Eigen::VectorXd r(b.size()), q(b.size());
  m.apply(x, q);
  r = b - q;
  double rnorm = r.norm();
  if (rnorm <= rel_tol * bnorm) {
    res.residual = rnorm / bnorm;
    res.converged = true;
    return res;
  }
  Eigen::VectorXd z = inv_diag.cwiseProduct(r);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  for (int it = 1; it <= max_iterations; ++it) {
    m.apply(p, q);
    const double pq = p.dot(q);
    if (!(pq > 0.0)) {
      res.breakdown = true;
      res.iterations = it;
      res.residual = rnorm / bnorm;
      return res;
    }
    const double alpha = rz / pq;
    x.noalias() += alpha * p;
    r.noalias() -= alpha * q;
    rnorm = r.norm();
    res.iterations = it;
    if (rnorm <= rel_tol * bnorm) {
      res.residual = rnorm / bnorm;
      res.converged = true;
      return res;
    }
    z = inv_diag.cwiseProduct(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  res.residual = rnorm / bnorm;
  return res;
}

}  // namespace parakkt
