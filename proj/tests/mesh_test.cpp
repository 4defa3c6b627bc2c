#include "parakkt/mesh.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "parakkt/error.hpp"
#include "parakkt/linalg.hpp"

namespace parakkt {
namespace {

TEST(MeshTest, OneDimensionalSpacings) {
  const Mesh m = Mesh::build(1, 1.0, 1.0, 3, 1, 1.0, 4);
  EXPECT_DOUBLE_EQ(m.hx(), 0.25);
  EXPECT_DOUBLE_EQ(m.dt(), 0.25);
  EXPECT_EQ(m.num_nodes(), 3);
  EXPECT_EQ(m.num_levels(), 5);
}

TEST(MeshTest, TwoDimensionalUnknownCount) {
  const Mesh m = Mesh::build(2, 1.0, 1.0, 4, 4, 1.0, 2);
  EXPECT_EQ(m.num_nodes(), 16);
  EXPECT_DOUBLE_EQ(m.hx(), 0.2);
  EXPECT_DOUBLE_EQ(m.hy(), 0.2);
}

TEST(MeshTest, RejectsUnsupportedDimension) {
  EXPECT_THROW(Mesh::build(3, 1.0, 1.0, 4, 4, 1.0, 2), UnsupportedDimension);
  try {
    Mesh::build(3, 1.0, 1.0, 4, 4, 1.0, 2);
  } catch (const UnsupportedDimension& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported dimension"), std::string::npos);
  }
}

TEST(MeshTest, RejectsNonPositiveSizes) {
  EXPECT_THROW(Mesh::build(1, 0.0, 1.0, 4, 1, 1.0, 2), InvalidArgument);
  EXPECT_THROW(Mesh::build(1, 1.0, 1.0, 1, 1, 1.0, 2), InvalidArgument);
  EXPECT_THROW(Mesh::build(1, 1.0, 1.0, 4, 1, -1.0, 2), InvalidArgument);
  EXPECT_THROW(Mesh::build(2, 1.0, 1.0, 4, 1, 1.0, 2), InvalidArgument);
  EXPECT_THROW(Mesh::build(1, 1.0, 1.0, 4, 1, 1.0, 0), InvalidArgument);
}

TEST(MeshTest, IndexMapIsBijective) {
  const Mesh m = Mesh::build_2d(2.0, 1.0, 5, 3, 1.0, 1);
  std::vector<int> seen(m.num_nodes(), 0);
  for (int j = 0; j < m.ny(); ++j) {
    for (int i = 0; i < m.nx(); ++i) {
      const int k = m.index(i, j);
      ASSERT_GE(k, 0);
      ASSERT_LT(k, m.num_nodes());
      ++seen[k];
      EXPECT_EQ(m.grid_index(k), (std::array<int, 2>{i, j}));
    }
  }
  for (int s : seen) EXPECT_EQ(s, 1);
}

TEST(MeshTest, QuadratureWeightsSumToMeasure) {
  const Mesh m1 = Mesh::build_1d(1.0, 7, 1.0, 1);
  EXPECT_NEAR(m1.weights().sum(), 1.0, 1e-14);
  const Mesh m2 = Mesh::build_2d(2.0, 0.5, 6, 9, 1.0, 1);
  EXPECT_NEAR(m2.weights().sum(), 1.0, 1e-14);
}

TEST(EllipticTest, OneDimensionalLaplacianStencil) {
  const Mesh m = Mesh::build_1d(1.0, 3, 1.0, 4);
  const EllipticOperator op = assemble_elliptic(m, Diffusion::constant(1.0));
  const Eigen::MatrixXd a = Eigen::MatrixXd(op.matrix());
  Eigen::MatrixXd expected(3, 3);
  expected << 32, -16, 0, -16, 32, -16, 0, -16, 32;
  EXPECT_LT((a - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EllipticTest, TwoDimensionalIsKroneckerSum) {
  const Mesh mx = Mesh::build_1d(1.0, 4, 1.0, 1);
  const Mesh my = Mesh::build_1d(2.0, 3, 1.0, 1);
  const Mesh m2 = Mesh::build_2d(1.0, 2.0, 4, 3, 1.0, 1);
  const Eigen::MatrixXd ax = Eigen::MatrixXd(assemble_elliptic(mx, Diffusion::constant(1.0)).matrix());
  const Eigen::MatrixXd ay = Eigen::MatrixXd(assemble_elliptic(my, Diffusion::constant(1.0)).matrix());
  const Eigen::MatrixXd a2 = Eigen::MatrixXd(assemble_elliptic(m2, Diffusion::constant(1.0)).matrix());
  // Node index j*nx + i: A2 = I_y (x) A_x + A_y (x) I_x.
  Eigen::MatrixXd kron = Eigen::MatrixXd::Zero(12, 12);
  for (int j = 0; j < 3; ++j) {
    for (int jj = 0; jj < 3; ++jj) {
      for (int i = 0; i < 4; ++i) {
        for (int ii = 0; ii < 4; ++ii) {
          double v = 0.0;
          if (j == jj) v += ax(i, ii);
          if (i == ii) v += ay(j, jj);
          kron(j * 4 + i, jj * 4 + ii) = v;
        }
      }
    }
  }
  EXPECT_LT((a2 - kron).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(EllipticTest, VariableCoefficientIsSymmetricMMatrix) {
  const Mesh m = Mesh::build_1d(1.0, 20, 1.0, 1);
  Diffusion d;
  d.name = "1+x";
  d.coefficient = [](const std::array<double, 2>& x) { return 1.0 + x[0]; };
  const EllipticOperator op = assemble_elliptic(m, d);
  const Eigen::MatrixXd a = Eigen::MatrixXd(op.matrix());
  const double scale = a.cwiseAbs().maxCoeff();
  EXPECT_LE((a - a.transpose()).cwiseAbs().maxCoeff(), 1e-14 * scale);
  for (int i = 0; i < a.rows(); ++i) {
    double off = 0.0;
    EXPECT_GT(a(i, i), 0.0);
    for (int j = 0; j < a.cols(); ++j) {
      if (j == i) continue;
      EXPECT_LE(a(i, j), 0.0);
      off += std::abs(a(i, j));
    }
    EXPECT_GE(a(i, i), off - 1e-10 * scale);
  }
}

TEST(EllipticTest, SymmetricPositiveDefiniteIn2D) {
  const Mesh m = Mesh::build_2d(1.0, 1.5, 9, 7, 1.0, 4);
  Diffusion d;
  d.coefficient = [](const std::array<double, 2>& x) { return 1.0 + x[0] * x[1] + 0.5 * std::sin(3 * x[0]); };
  const EllipticOperator op = assemble_elliptic(m, d);
  const Eigen::MatrixXd a = Eigen::MatrixXd(op.matrix());
  EXPECT_LE((a - a.transpose()).cwiseAbs().maxCoeff(), 1e-14 * a.cwiseAbs().maxCoeff());

  // Rows away from the boundary sum to zero for a constant coefficient.
  const EllipticOperator lap = assemble_elliptic(m, Diffusion::constant(2.0));
  const Eigen::VectorXd rows = lap.matrix() * Eigen::VectorXd::Ones(m.num_nodes());
  for (int k = 0; k < m.num_nodes(); ++k) {
    const auto [i, j] = m.grid_index(k);
    if (i > 0 && i < m.nx() - 1 && j > 0 && j < m.ny() - 1) {
      EXPECT_NEAR(rows[k], 0.0, 1e-9);
    }
  }

  // CG converges on a random right-hand side; Gershgorin bound of the
  // shifted step matrix is positive.
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  Eigen::VectorXd b(m.num_nodes());
  for (auto& v : b) v = normal(rng);
  const Eigen::VectorXd zero_c = Eigen::VectorXd::Zero(m.num_nodes());
  const StepOperator step(op, 0.1, zero_c);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(m.num_nodes());
  const CgResult r = solve_pcg(step, b, x, 1e-12, 1000);
  EXPECT_TRUE(r.converged);
  EXPECT_GE(op.gershgorin_lower_bound(), -1e-9 * a.cwiseAbs().maxCoeff());
  EXPECT_GT(1.0 + 0.1 * op.gershgorin_lower_bound(), 0.0);
}

TEST(EllipticTest, RejectsNonPositiveCoefficient) {
  const Mesh m = Mesh::build_1d(1.0, 5, 1.0, 1);
  Diffusion d;
  d.coefficient = [](const std::array<double, 2>& x) { return x[0] - 0.5; };
  EXPECT_THROW(assemble_elliptic(m, d), InvalidArgument);
}

TEST(EllipticTest, SecondOrderConsistencyOnSmoothFunction) {
  const double pi = std::numbers::pi;
  std::vector<double> errors;
  for (int n : {7, 15, 31, 63}) {
    const Mesh m = Mesh::build_2d(1.0, 1.0, n, n, 1.0, 1);
    const EllipticOperator op = assemble_elliptic(m, Diffusion::constant(1.0));
    Eigen::VectorXd v(m.num_nodes()), lap(m.num_nodes());
    for (int k = 0; k < m.num_nodes(); ++k) {
      const auto x = m.coords(k);
      v[k] = std::sin(pi * x[0]) * std::sin(2 * pi * x[1]) * std::exp(x[0]);
      // -Laplacian of sin(pi x) e^x sin(2 pi y).
      const double fx = std::sin(pi * x[0]) * std::exp(x[0]);
      const double fxx = std::exp(x[0]) * ((1 - pi * pi) * std::sin(pi * x[0]) + 2 * pi * std::cos(pi * x[0]));
      lap[k] = -(fxx * std::sin(2 * pi * x[1]) - 4 * pi * pi * fx * std::sin(2 * pi * x[1]));
    }
    errors.push_back((op.apply(v) - lap).lpNorm<Eigen::Infinity>());
  }
  for (size_t i = 1; i < errors.size(); ++i) {
    const double ratio = errors[i - 1] / errors[i];
    EXPECT_GT(ratio, 3.5) << "level " << i;
  }
}

}  // namespace
}  // namespace parakkt
