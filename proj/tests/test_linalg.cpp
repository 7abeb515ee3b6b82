#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "proxyaudit/linalg.hpp"
#include "proxyaudit/rng.hpp"

namespace pa = proxyaudit;

namespace {

// Independent oracle: solve the normal equations X^T X b = X^T y by Gaussian
// elimination with partial pivoting. Only used to cross-check the QR path.
pa::Vector normal_equations_oracle(const pa::Matrix& x, const pa::Vector& y) {
  const std::size_t q = x.cols();
  pa::Matrix a(q, q + 1);
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < x.rows(); ++r) s += x(r, i) * x(r, j);
      a(i, j) = s;
    }
    double s = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) s += x(r, i) * y[r];
    a(i, q) = s;
  }
  for (std::size_t k = 0; k < q; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < q; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    for (std::size_t j = 0; j <= q; ++j) std::swap(a(k, j), a(piv, j));
    for (std::size_t i = k + 1; i < q; ++i) {
      const double f = a(i, k) / a(k, k);
      for (std::size_t j = k; j <= q; ++j) a(i, j) -= f * a(k, j);
    }
  }
  pa::Vector b(q);
  for (std::size_t ii = q; ii-- > 0;) {
    double s = a(ii, q);
    for (std::size_t j = ii + 1; j < q; ++j) s -= a(ii, j) * b[j];
    b[ii] = s / a(ii, ii);
  }
  return b;
}

}  // namespace

TEST(StableSum, PermutationInvariantBitExact) {
  pa::Rng rng(7);
  pa::Vector v(40);
  for (double& x : v) x = rng.uniform(-5.0, 5.0);
  const double base = pa::stable_sum(v);
  for (int rep = 0; rep < 20; ++rep) {
    for (std::size_t i = v.size(); i-- > 1;)
      std::swap(v[i], v[rng.uniform_index(i + 1)]);
    EXPECT_EQ(base, pa::stable_sum(v));
  }
}

TEST(LeastSquares, ExactLinearFit) {
  // y = 2 + 3x recovered exactly on any grid with an intercept column
  const int n = 17;
  pa::Matrix x(n, 2);
  pa::Vector y(n);
  for (int i = 0; i < n; ++i) {
    const double xi = 0.3 * i - 2.0;
    x(i, 0) = 1.0;
    x(i, 1) = xi;
    y[i] = 2.0 + 3.0 * xi;
  }
  const auto sol = pa::solve_least_squares(x, y);
  EXPECT_NEAR(sol.coefficients[0], 2.0, 1e-10);
  EXPECT_NEAR(sol.coefficients[1], 3.0, 1e-10);
  for (double r : sol.residuals) EXPECT_NEAR(r, 0.0, 1e-9);
}

TEST(LeastSquares, DuplicatedColumnIsRankDeficient) {
  pa::Matrix x(6, 3);
  pa::Vector y(6);
  for (int i = 0; i < 6; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = i;
    x(i, 2) = i;  // duplicate
    y[i] = i * 2.0 + 1.0;
  }
  try {
    pa::solve_least_squares(x, y);
    FAIL() << "expected RankDeficient";
  } catch (const pa::RankDeficient& e) {
    ASSERT_FALSE(e.offending_columns.empty());
    for (int c : e.offending_columns) EXPECT_TRUE(c == 1 || c == 2);
  }
}

TEST(LeastSquares, MatchesNormalEquationsOracle) {
  // 5-row system with one dummy and one control
  pa::Matrix x(5, 3);
  pa::Vector y = {1.0, 2.0, 5.0, 6.5, 3.0};
  const double dummy[5] = {1, 1, 0, 0, 1};
  const double ctrl[5] = {0.2, -1.0, 0.5, 2.0, 1.5};
  for (int i = 0; i < 5; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = dummy[i];
    x(i, 2) = ctrl[i];
  }
  const auto sol = pa::solve_least_squares(x, y);
  const pa::Vector oracle = normal_equations_oracle(x, y);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(sol.coefficients[j], oracle[j], 1e-9);
}

TEST(LeastSquares, ResidualsOrthogonalToDesign) {
  pa::Rng rng(11);
  for (int rep = 0; rep < 25; ++rep) {
    const std::size_t n = 20 + rng.uniform_index(30);
    const std::size_t q = 2 + rng.uniform_index(4);
    pa::Matrix x(n, q);
    pa::Vector y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x(i, 0) = 1.0;
      for (std::size_t j = 1; j < q; ++j) x(i, j) = rng.normal();
      y[i] = rng.normal(0.0, 2.0);
    }
    const auto sol = pa::solve_least_squares(x, y);
    const double ynorm = pa::norm2(y) + 1e-30;
    for (std::size_t j = 0; j < q; ++j) {
      const pa::Vector col = x.col(j);
      const double rel = std::abs(pa::dot(col, sol.residuals)) /
                         (pa::norm2(col) * ynorm);
      EXPECT_LT(rel, 1e-6);
    }
  }
}

TEST(Jacobi, TwoByTwoKnownSpectrum) {
  pa::Matrix a(2, 2);
  a(0, 0) = 2.0;
  a(0, 1) = 1.0;
  a(1, 0) = 1.0;
  a(1, 1) = 2.0;
  const auto eig = pa::jacobi_eigen_symmetric(a);
  EXPECT_NEAR(eig.values[0], 3.0, 1e-12);
  EXPECT_NEAR(eig.values[1], 1.0, 1e-12);
}

TEST(Jacobi, WorkedExampleSimilarityTransform) {
  // M for the 2-class worked example (equal counts) is C itself; its
  // characteristic polynomial gives eigenvalues 1 and 0.8 by hand.
  pa::Matrix m(2, 2);
  m(0, 0) = 0.9;
  m(0, 1) = 0.1;
  m(1, 0) = 0.1;
  m(1, 1) = 0.9;
  const auto eig = pa::jacobi_eigen_symmetric(m);
  EXPECT_NEAR(eig.values[0], 1.0, 1e-12);
  EXPECT_NEAR(eig.values[1], 0.8, 1e-12);
}

TEST(Jacobi, ReconstructsRandomSymmetricMatrices) {
  pa::Rng rng(23);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 2 + rng.uniform_index(5);
    pa::Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = rng.normal();
    const auto eig = pa::jacobi_eigen_symmetric(a, true);
    // A v = lambda v for every pair
    for (std::size_t k = 0; k < n; ++k) {
      const pa::Vector v = eig.vectors.col(k);
      const pa::Vector av = pa::matvec(a, v);
      for (std::size_t i = 0; i < n; ++i)
        EXPECT_NEAR(av[i], eig.values[k] * v[i], 1e-9);
    }
    // descending order
    for (std::size_t k = 1; k < n; ++k)
      EXPECT_GE(eig.values[k - 1], eig.values[k] - 1e-14);
  }
}
