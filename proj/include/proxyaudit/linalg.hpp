#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "proxyaudit/errors.hpp"

namespace proxyaudit {

using Vector = std::vector<double>;

// Dense row-major matrix. Sized for this library's needs: small p x p
// confusion matrices and tall-skinny regression designs.
class Matrix {
public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  const std::vector<double>& data() const { return data_; }

  Vector col(std::size_t j) const {
    Vector v(rows_);
    for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
    return v;
  }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

private:
  std::size_t rows_, cols_;
  std::vector<double> data_;
};

inline Vector matvec(const Matrix& a, const Vector& x) {
  if (a.cols() != x.size())
    throw DimensionMismatch("matvec: " + std::to_string(a.cols()) + " cols vs " +
                            std::to_string(x.size()) + " entries");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DimensionMismatch("matmul shape mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

inline double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw LengthMismatch(a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

// Permutation-invariant sum: sorts a copy ascending before accumulating, so
// the same multiset of addends always rounds identically.
inline double stable_sum(Vector v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

// --- symmetric eigensolver -------------------------------------------------

struct SymmetricEigen {
  Vector values;   // sorted descending
  Matrix vectors;  // columns aligned with values
};

// Cyclic Jacobi sweeps on a symmetric matrix; iterates until the
// off-diagonal Frobenius norm falls below 1e-12 relative to the matrix norm.
inline SymmetricEigen jacobi_eigen_symmetric(Matrix a, bool want_vectors = false) {
  const std::size_t n = a.rows();
  if (n != a.cols()) throw DimensionMismatch("jacobi: matrix not square");
  Matrix v = want_vectors ? Matrix::identity(n) : Matrix();

  auto off_norm = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
    return std::sqrt(2.0 * s);
  };
  double full = 0.0;
  for (double x : a.data()) full += x * x;
  full = std::sqrt(full);
  const double target = 1e-12 * std::max(1.0, full);

  for (int sweep = 0; sweep < 100 && off_norm() > target; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p), aqq = a(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        if (want_vectors) {
          for (std::size_t k = 0; k < n; ++k) {
            const double vkp = v(k, p), vkq = v(k, q);
            v(k, p) = c * vkp - s * vkq;
            v(k, q) = s * vkp + c * vkq;
          }
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  SymmetricEigen out;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = a(order[i], order[i]);
  if (want_vectors) {
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
  }
  return out;
}

// --- least squares ----------------------------------------------------------

struct LeastSquaresSolution {
  Vector coefficients;
  Vector fitted;
  Vector residuals;
  int rank = 0;
};

// Householder QR with column pivoting. Rank decision uses the singular
// values of R (equal to those of the design); columns pivoted past the
// numerical rank are reported as offenders.
inline LeastSquaresSolution solve_least_squares(const Matrix& design, const Vector& y,
                                                double rank_rtol = 1e-10) {
  const std::size_t n = design.rows();
  const std::size_t q = design.cols();
  if (y.size() != n) throw LengthMismatch(y.size(), n);
  if (q == 0 || n < q)
    throw DimensionMismatch("least squares needs n >= q >= 1, got n=" +
                            std::to_string(n) + " q=" + std::to_string(q));

  Matrix a = design;
  Vector b = y;
  std::vector<std::size_t> piv(q);
  std::iota(piv.begin(), piv.end(), 0);

  Vector colnorm2(q, 0.0);
  for (std::size_t j = 0; j < q; ++j)
    for (std::size_t i = 0; i < n; ++i) colnorm2[j] += a(i, j) * a(i, j);

  for (std::size_t k = 0; k < q; ++k) {
    // pivot: bring the column with the largest remaining norm to position k
    std::size_t best = k;
    double bestn = -1.0;
    for (std::size_t j = k; j < q; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < n; ++i) s += a(i, j) * a(i, j);
      if (s > bestn) {
        bestn = s;
        best = j;
      }
    }
    if (best != k) {
      for (std::size_t i = 0; i < n; ++i) std::swap(a(i, k), a(i, best));
      std::swap(piv[k], piv[best]);
    }

    double alpha = std::sqrt(std::max(bestn, 0.0));
    if (alpha == 0.0) continue;  // column already annihilated; R(k,k)=0
    if (a(k, k) > 0.0) alpha = -alpha;

    // Householder vector: (vkk, a(k+1..n-1, k)), stored below the diagonal
    const double vkk = a(k, k) - alpha;
    a(k, k) = alpha;
    double vnorm2 = vkk * vkk;
    for (std::size_t i = k + 1; i < n; ++i) vnorm2 += a(i, k) * a(i, k);
    if (vnorm2 == 0.0) continue;

    for (std::size_t j = k + 1; j < q; ++j) {
      double s = vkk * a(k, j);
      for (std::size_t i = k + 1; i < n; ++i) s += a(i, k) * a(i, j);
      const double tau = 2.0 * s / vnorm2;
      a(k, j) -= tau * vkk;
      for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= tau * a(i, k);
    }
    {
      double s = vkk * b[k];
      for (std::size_t i = k + 1; i < n; ++i) s += a(i, k) * b[i];
      const double tau = 2.0 * s / vnorm2;
      b[k] -= tau * vkk;
      for (std::size_t i = k + 1; i < n; ++i) b[i] -= tau * a(i, k);
    }
  }

  // R is the upper q x q triangle of a (columns permuted by piv).
  Matrix r(q, q);
  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t j = i; j < q; ++j) r(i, j) = a(i, j);

  // Singular values of R via eigenvalues of R^T R (q is small).
  Matrix rtr(q, q);
  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t j = 0; j < q; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k <= std::min(i, j); ++k) s += r(k, i) * r(k, j);
      rtr(i, j) = s;
    }
  SymmetricEigen eig = jacobi_eigen_symmetric(rtr);
  const double smax = std::sqrt(std::max(eig.values.front(), 0.0));
  const double smin = std::sqrt(std::max(eig.values.back(), 0.0));

  if (smax == 0.0 || smin <= rank_rtol * smax) {
    // offenders: pivot columns whose diagonal collapsed
    std::vector<int> offenders;
    const double dmax = [&] {
      double m = 0.0;
      for (std::size_t i = 0; i < q; ++i) m = std::max(m, std::abs(r(i, i)));
      return m;
    }();
    for (std::size_t i = 0; i < q; ++i)
      if (std::abs(r(i, i)) <= rank_rtol * std::max(dmax, 1e-300))
        offenders.push_back(static_cast<int>(piv[i]));
    std::sort(offenders.begin(), offenders.end());
    if (offenders.empty()) offenders.push_back(static_cast<int>(piv[q - 1]));
    throw RankDeficient(std::move(offenders));
  }

  // back substitution on the permuted system
  Vector z(q, 0.0);
  for (std::size_t ii = q; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t j = ii + 1; j < q; ++j) s -= r(ii, j) * z[j];
    z[ii] = s / r(ii, ii);
  }

  LeastSquaresSolution out;
  out.rank = static_cast<int>(q);
  out.coefficients.assign(q, 0.0);
  for (std::size_t j = 0; j < q; ++j) out.coefficients[piv[j]] = z[j];
  out.fitted = matvec(design, out.coefficients);
  out.residuals.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.residuals[i] = y[i] - out.fitted[i];
  return out;
}

}  // namespace proxyaudit
