#pragma once

#include <map>
#include <string>
#include <vector>

#include "proxyaudit/errors.hpp"
#include "proxyaudit/linalg.hpp"

namespace proxyaudit {

enum class Coding { CellMeans, Reference };

struct DesignSpec {
  Coding coding = Coding::CellMeans;
  int reference_category = -1;  // Reference coding only
  std::vector<std::string> control_columns;
};

struct RegressionFit {
  Vector coefficients;
  Vector fitted;
  Vector residuals;
  double residual_variance = 0.0;  // RSS / (n - q)
  DesignSpec design;
};

namespace detail {

inline double residual_variance(const Vector& residuals, std::size_t params) {
  const std::size_t n = residuals.size();
  if (n <= params) return 0.0;
  double rss = 0.0;
  for (double r : residuals) rss += r * r;
  return rss / static_cast<double>(n - params);
}

inline void check_labels(const std::vector<int>& labels, int categories) {
  for (int l : labels)
    if (l < 0 || l >= categories)
      throw ValidationError("label " + std::to_string(l) + " outside [0, " +
                            std::to_string(categories) + ")");
}

}  // namespace detail

// Intercept-free one-hot fit: each coefficient is the mean outcome of its
// category. Exact closed form, no solver involved.
inline RegressionFit fit_cell_means(const std::vector<int>& labels, int categories,
                                    const Vector& y) {
  if (labels.size() != y.size()) throw LengthMismatch(labels.size(), y.size());
  if (categories < 1) throw ValidationError("need at least one category");
  detail::check_labels(labels, categories);

  Vector sums(categories, 0.0);
  std::vector<std::size_t> counts(categories, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    sums[labels[i]] += y[i];
    counts[labels[i]] += 1;
  }
  for (int j = 0; j < categories; ++j)
    if (counts[j] == 0) throw EmptyCategory(j);

  RegressionFit fit;
  fit.design.coding = Coding::CellMeans;
  fit.coefficients.resize(categories);
  for (int j = 0; j < categories; ++j)
    fit.coefficients[j] = sums[j] / static_cast<double>(counts[j]);
  fit.fitted.resize(y.size());
  fit.residuals.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    fit.fitted[i] = fit.coefficients[labels[i]];
    fit.residuals[i] = y[i] - fit.fitted[i];
  }
  fit.residual_variance = detail::residual_variance(fit.residuals, categories);
  return fit;
}

// General least squares via Householder QR with column pivoting; rejects
// designs whose smallest singular value falls below 1e-10 of the largest.
inline RegressionFit fit_ols(const Matrix& design, const Vector& y,
                             DesignSpec spec = {}) {
  LeastSquaresSolution sol = solve_least_squares(design, y);
  RegressionFit fit;
  fit.design = std::move(spec);
  fit.coefficients = std::move(sol.coefficients);
  fit.fitted = std::move(sol.fitted);
  fit.residuals = std::move(sol.residuals);
  fit.residual_variance = detail::residual_variance(fit.residuals, design.cols());
  return fit;
}

// Design builder: intercept + one dummy per non-reference category + controls.
// Column order: intercept, categories in label order (reference skipped),
// then control columns in the order given.
inline Matrix build_reference_design(const std::vector<int>& labels, int categories,
                                     int reference,
                                     const std::vector<Vector>& controls) {
  if (reference < 0 || reference >= categories)
    throw ValidationError("reference category " + std::to_string(reference) +
                          " outside [0, " + std::to_string(categories) + ")");
  detail::check_labels(labels, categories);
  const std::size_t n = labels.size();
  for (const auto& c : controls)
    if (c.size() != n) throw LengthMismatch(c.size(), n);

  const std::size_t q = 1 + static_cast<std::size_t>(categories - 1) + controls.size();
  Matrix x(n, q);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    std::size_t col = 1;
    for (int j = 0; j < categories; ++j) {
      if (j == reference) continue;
      x(i, col++) = labels[i] == j ? 1.0 : 0.0;
    }
    for (std::size_t c = 0; c < controls.size(); ++c) x(i, col + c) = controls[c][i];
  }
  return x;
}

struct AdjustedDisparities {
  int reference = 0;
  std::map<int, double> disparity;  // category -> coefficient vs reference
  double intercept = 0.0;
  Vector control_coefficients;      // order of the control columns passed in
  RegressionFit fit;
};

// Reference-coded fit with intercept and controls; the returned map holds
// the per-category coefficients relative to the reference group.
inline AdjustedDisparities adjusted_disparities(const std::vector<int>& labels,
                                                int categories,
                                                const std::vector<Vector>& controls,
                                                const Vector& y, int reference) {
  Matrix x = build_reference_design(labels, categories, reference, controls);
  DesignSpec spec;
  spec.coding = Coding::Reference;
  spec.reference_category = reference;
  RegressionFit fit = fit_ols(x, y, spec);

  AdjustedDisparities out;
  out.reference = reference;
  out.intercept = fit.coefficients[0];
  std::size_t col = 1;
  for (int j = 0; j < categories; ++j) {
    if (j == reference) continue;
    out.disparity[j] = fit.coefficients[col++];
  }
  out.control_coefficients.assign(fit.coefficients.begin() + col,
                                  fit.coefficients.end());
  out.fit = std::move(fit);
  return out;
}

}  // namespace proxyaudit
