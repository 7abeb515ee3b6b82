#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "proxyaudit/errors.hpp"
#include "proxyaudit/linalg.hpp"
#include "proxyaudit/regress.hpp"
#include "proxyaudit/rng.hpp"

namespace proxyaudit {

// Cross-tabulation of true vs predicted labels. flow[j][k] counts
// observations truly in class k that were predicted as class j, so rows are
// predictions and columns are the reference classes.
struct FlowCounts {
  int categories = 0;
  std::vector<std::vector<std::int64_t>> flow;
  std::vector<std::int64_t> true_counts;  // column sums n_k
  std::vector<std::int64_t> pred_counts;  // row sums  n~_j
  std::vector<std::int64_t> out_flows;    // n_j - n_{j->j}

  std::int64_t total() const {
    std::int64_t t = 0;
    for (auto v : true_counts) t += v;
    return t;
  }
};

inline FlowCounts flows_from_counts(std::vector<std::vector<std::int64_t>> cells) {
  FlowCounts f;
  f.categories = static_cast<int>(cells.size());
  for (const auto& row : cells)
    if (static_cast<int>(row.size()) != f.categories)
      throw DimensionMismatch("flow matrix must be square");
  for (const auto& row : cells)
    for (auto v : row)
      if (v < 0) throw ValidationError("flow counts must be nonnegative");
  f.flow = std::move(cells);
  f.true_counts.assign(f.categories, 0);
  f.pred_counts.assign(f.categories, 0);
  f.out_flows.assign(f.categories, 0);
  for (int j = 0; j < f.categories; ++j)
    for (int k = 0; k < f.categories; ++k) {
      f.pred_counts[j] += f.flow[j][k];
      f.true_counts[k] += f.flow[j][k];
    }
  for (int j = 0; j < f.categories; ++j)
    f.out_flows[j] = f.true_counts[j] - f.flow[j][j];
  return f;
}

inline FlowCounts flows_from_labels(const std::vector<int>& true_labels,
                                    const std::vector<int>& pred_labels,
                                    int categories) {
  if (true_labels.size() != pred_labels.size())
    throw LengthMismatch(true_labels.size(), pred_labels.size());
  std::vector<std::vector<std::int64_t>> cells(
      categories, std::vector<std::int64_t>(categories, 0));
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    const int t = true_labels[i], p = pred_labels[i];
    if (t < 0 || t >= categories || p < 0 || p >= categories)
      throw ValidationError("label outside category range at row " +
                            std::to_string(i));
    cells[p][t] += 1;
  }
  return flows_from_counts(std::move(cells));
}

// Column-stochastic matrix C with C(j,k) = Pr(predicted j | true k).
struct ConfusionMatrix {
  Matrix c;

  explicit ConfusionMatrix(Matrix m) : c(std::move(m)) {
    if (c.rows() != c.cols()) throw DimensionMismatch("confusion matrix not square");
    for (std::size_t k = 0; k < c.cols(); ++k) {
      double sum = 0.0;
      for (std::size_t j = 0; j < c.rows(); ++j) {
        if (c(j, k) < 0.0)
          throw ValidationError("confusion matrix entry is negative");
        sum += c(j, k);
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw ValidationError("confusion matrix column " + std::to_string(k) +
                              " sums to " + std::to_string(sum) + ", expected 1");
    }
  }

  int categories() const { return static_cast<int>(c.rows()); }
  double operator()(int j, int k) const { return c(j, k); }
};

inline ConfusionMatrix confusion_from_flows(const FlowCounts& f) {
  for (int k = 0; k < f.categories; ++k)
    if (f.true_counts[k] == 0) throw EmptyTrueClass(k);
  Matrix c(f.categories, f.categories);
  for (int j = 0; j < f.categories; ++j)
    for (int k = 0; k < f.categories; ++k)
      c(j, k) = static_cast<double>(f.flow[j][k]) /
                static_cast<double>(f.true_counts[k]);
  return ConfusionMatrix(std::move(c));
}

// Share of each predicted class that is correctly classified: n_{j->j} / n~_j.
inline Vector precision_per_predicted_class(const FlowCounts& f) {
  Vector p(f.categories);
  for (int j = 0; j < f.categories; ++j) {
    if (f.pred_counts[j] == 0) throw EmptyPredictedClass(j);
    p[j] = static_cast<double>(f.flow[j][j]) / static_cast<double>(f.pred_counts[j]);
  }
  return p;
}

// --- coefficient decomposition ----------------------------------------------

struct EstimatorDecomposition {
  Vector beta_true;   // cell means on the true labels
  Vector beta_proxy;  // cell means on the proxy labels
  Vector systematic;  // cell means of the true fitted values on proxy labels
  Vector bias;        // systematic - beta_true
  Vector noise;       // cell means of the true-model residuals on proxy labels
};

// Splits the proxy-label estimator into the noise-free mixing component and
// the sampling-noise component; beta_proxy = beta_true + bias + noise holds
// exactly because cell means are linear in y.
inline EstimatorDecomposition decompose_proxy_estimator(
    const std::vector<int>& true_labels, const std::vector<int>& proxy_labels,
    int categories, const Vector& y) {
  if (true_labels.size() != proxy_labels.size())
    throw LengthMismatch(true_labels.size(), proxy_labels.size());
  RegressionFit true_fit = fit_cell_means(true_labels, categories, y);
  RegressionFit sys_fit = fit_cell_means(proxy_labels, categories, true_fit.fitted);
  RegressionFit proxy_fit = fit_cell_means(proxy_labels, categories, y);
  RegressionFit noise_fit =
      fit_cell_means(proxy_labels, categories, true_fit.residuals);

  EstimatorDecomposition d;
  d.beta_true = std::move(true_fit.coefficients);
  d.beta_proxy = std::move(proxy_fit.coefficients);
  d.systematic = std::move(sys_fit.coefficients);
  d.noise = std::move(noise_fit.coefficients);
  d.bias.resize(categories);
  for (int j = 0; j < categories; ++j) d.bias[j] = d.systematic[j] - d.beta_true[j];
  return d;
}

struct MixtureResult {
  Vector mixed;          // per predicted class: sum_k n_{k->j} beta_k / n~_j
  Vector category_bias;  // mixed - beta
};

// The mixture representation of the noise-free proxy coefficient: predicted
// class j averages the effects of every true class that flows into it.
inline MixtureResult mixture_coefficients(const FlowCounts& f, const Vector& beta) {
  if (static_cast<int>(beta.size()) != f.categories)
    throw DimensionMismatch("beta length does not match flow categories");
  MixtureResult r;
  r.mixed.resize(f.categories);
  r.category_bias.resize(f.categories);
  for (int j = 0; j < f.categories; ++j) {
    if (f.pred_counts[j] == 0) throw EmptyPredictedClass(j);
    double mass =
        static_cast<double>(f.true_counts[j] - f.out_flows[j]) * beta[j];
    for (int k = 0; k < f.categories; ++k) {
      if (k == j) continue;
      mass += static_cast<double>(f.flow[j][k]) * beta[k];
    }
    r.mixed[j] = mass / static_cast<double>(f.pred_counts[j]);
    r.category_bias[j] = r.mixed[j] - beta[j];
  }
  return r;
}

// --- expectation identities ---------------------------------------------------

namespace detail {

inline void check_dims(const ConfusionMatrix& c, const Vector& n) {
  if (static_cast<int>(n.size()) != c.categories())
    throw DimensionMismatch("count vector length does not match matrix size");
}

inline Vector elementwise(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw LengthMismatch(a.size(), b.size());
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

}  // namespace detail

// E[n~ | n] = C n
inline Vector expected_counts(const ConfusionMatrix& c, const Vector& n) {
  detail::check_dims(c, n);
  return matvec(c.c, n);
}

// E[n~ . beta~ | n] = C (n . beta)
inline Vector expected_signal_mass(const ConfusionMatrix& c, const Vector& n,
                                   const Vector& beta) {
  detail::check_dims(c, n);
  return matvec(c.c, detail::elementwise(n, beta));
}

// Ratio-of-expectations approximation: diag(Cn)^{-1} C (n . beta).
inline Vector roe_expected_beta(const ConfusionMatrix& c, const Vector& n,
                                const Vector& beta) {
  Vector counts = expected_counts(c, n);
  Vector mass = expected_signal_mass(c, n, beta);
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] <= 0.0) throw EmptyExpectedClass(static_cast<int>(j));
    mass[j] /= counts[j];
  }
  return mass;
}

struct NeutralityCheck {
  bool neutral = false;
  double max_relative_deviation = 0.0;  // max_j |(Cn)_j - n_j| / n_j
};

// Neutral condition Cn = n: each class keeps its expected total count.
inline NeutralityCheck check_neutrality(const ConfusionMatrix& c, const Vector& n,
                                        double tol = 1e-9) {
  Vector counts = expected_counts(c, n);
  NeutralityCheck out;
  out.neutral = true;
  for (std::size_t j = 0; j < n.size(); ++j) {
    if (n[j] <= 0.0) throw EmptyTrueClass(static_cast<int>(j));
    const double dev = std::abs(counts[j] - n[j]) / n[j];
    out.max_relative_deviation = std::max(out.max_relative_deviation, dev);
    if (std::abs(counts[j] - n[j]) > tol * n[j]) out.neutral = false;
  }
  return out;
}

struct ExpectedBias {
  Vector bias;                        // beta - roe_expected_beta
  NeutralityCheck neutrality;
  std::optional<Vector> neutral_form; // diag(Cn)^{-1} (I - C)(n . beta)
};

// Expected bias in matrix form; when the neutral condition holds the
// simplified form is computed as well and cross-checked against the general
// one.
inline ExpectedBias expected_bias(const ConfusionMatrix& c, const Vector& n,
                                  const Vector& beta, double neutral_tol = 1e-9) {
  ExpectedBias out;
  Vector roe = roe_expected_beta(c, n, beta);
  out.bias.resize(roe.size());
  for (std::size_t j = 0; j < roe.size(); ++j) out.bias[j] = beta[j] - roe[j];
  out.neutrality = check_neutrality(c, n, neutral_tol);
  if (out.neutrality.neutral) {
    Vector counts = expected_counts(c, n);
    Vector mass = detail::elementwise(n, beta);
    Vector cmass = matvec(c.c, mass);
    Vector nf(roe.size());
    for (std::size_t j = 0; j < roe.size(); ++j)
      nf[j] = (mass[j] - cmass[j]) / counts[j];
    const double scale = [&] {
      double m = 1.0;
      for (double b : out.bias) m = std::max(m, std::abs(b));
      return m;
    }();
    for (std::size_t j = 0; j < roe.size(); ++j)
      if (std::abs(nf[j] - out.bias[j]) > 1e-9 * scale)
        throw NumericError("neutral-form bias disagrees with general form");
    out.neutral_form = std::move(nf);
  }
  return out;
}

struct BalanceCheck {
  bool balanced = false;
  double max_violation = 0.0;   // max_{jk} |C_{jk} n_k - C_{kj} n_j|
  bool m_symmetric = false;     // computed from M itself
  double max_asymmetry = 0.0;   // max_{jk} |M_{jk} - M_{kj}| sqrt(n_j n_k)
};

inline Matrix similarity_transform(const ConfusionMatrix& c, const Vector& n) {
  detail::check_dims(c, n);
  const int p = c.categories();
  Matrix m(p, p);
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < p; ++k)
      m(j, k) = c(j, k) * std::sqrt(n[k] / n[j]);
  return m;
}

// Detailed balance C_{jk} n_k = C_{kj} n_j, checked directly on C and, as an
// independent route, as symmetry of M = diag(n)^{-1/2} C diag(n)^{1/2}.
// Both comparisons use the same count-scale threshold so they agree.
inline BalanceCheck check_detailed_balance(const ConfusionMatrix& c, const Vector& n,
                                           double tol = 1e-9) {
  detail::check_dims(c, n);
  const int p = c.categories();
  double nmax = 0.0;
  for (std::size_t j = 0; j < n.size(); ++j) {
    if (n[j] <= 0.0) throw EmptyTrueClass(static_cast<int>(j));
    nmax = std::max(nmax, n[j]);
  }
  BalanceCheck out;
  for (int j = 0; j < p; ++j)
    for (int k = j + 1; k < p; ++k)
      out.max_violation =
          std::max(out.max_violation, std::abs(c(j, k) * n[k] - c(k, j) * n[j]));
  out.balanced = out.max_violation <= tol * nmax;

  Matrix m = similarity_transform(c, n);
  for (int j = 0; j < p; ++j)
    for (int k = j + 1; k < p; ++k)
      out.max_asymmetry = std::max(
          out.max_asymmetry, std::abs(m(j, k) - m(k, j)) * std::sqrt(n[j] * n[k]));
  out.m_symmetric = out.max_asymmetry <= tol * nmax;
  return out;
}

struct ShrinkageReport {
  double ss_true = 0.0;   // || w ||_n^2 = sum_j n_j (beta_j - beta_bar)^2
  double ss_proxy = 0.0;  // || C w ||_n^2
  Matrix similarity;      // M = diag(n)^{-1/2} C diag(n)^{1/2}
  bool neutral = false;
  bool reversible = false;
  std::optional<Vector> eigenvalues;  // of M, reversible case only, descending
};

// Between-group variability of fitted values before and after the confusion
// map, in the diag(n)^{-1} weighted norm. For reversible C the spectrum of
// the symmetric similarity transform certifies |lambda| <= 1 with
// lambda_max = 1, which is what forces ss_proxy <= ss_true.
inline ShrinkageReport shrinkage_report(const ConfusionMatrix& c, const Vector& n,
                                        const Vector& beta, double tol = 1e-9) {
  detail::check_dims(c, n);
  if (beta.size() != n.size()) throw LengthMismatch(beta.size(), n.size());
  for (std::size_t j = 0; j < n.size(); ++j)
    if (n[j] <= 0.0) throw EmptyTrueClass(static_cast<int>(j));

  const std::size_t p = n.size();
  double total = 0.0, mass = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    total += n[j];
    mass += n[j] * beta[j];
  }
  const double beta_bar = mass / total;

  Vector w(p);
  for (std::size_t j = 0; j < p; ++j) w[j] = n[j] * beta[j] - beta_bar * n[j];

  auto weighted_norm2 = [&](const Vector& u) {
    double s = 0.0;
    for (std::size_t j = 0; j < p; ++j) s += u[j] * u[j] / n[j];
    return s;
  };

  ShrinkageReport rep;
  rep.ss_true = weighted_norm2(w);
  rep.ss_proxy = weighted_norm2(matvec(c.c, w));
  rep.similarity = similarity_transform(c, n);
  rep.neutral = check_neutrality(c, n, tol).neutral;
  rep.reversible = check_detailed_balance(c, n, tol).balanced;

  if (rep.reversible) {
    // symmetrize away the sub-tolerance asymmetry before the eigensolve
    Matrix sym(p, p);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j)
        sym(i, j) = 0.5 * (rep.similarity(i, j) + rep.similarity(j, i));
    SymmetricEigen eig = jacobi_eigen_symmetric(std::move(sym));
    for (double lam : eig.values)
      if (std::abs(lam) > 1.0 + 1e-9)
        throw NumericError("similarity-transform eigenvalue exceeds 1: " +
                           std::to_string(lam));
    if (rep.neutral && std::abs(eig.values.front() - 1.0) > 1e-9)
      throw NumericError("leading eigenvalue of M is not 1 under neutrality");
    rep.eigenvalues = std::move(eig.values);
  }
  return rep;
}

// Classical continuous errors-in-variables comparison point: the scalar
// attenuation factor Var(x) / (Var(x) + Var(e)).
inline double classical_attenuation_baseline(double x_variance, double error_variance,
                                             double beta) {
  if (x_variance <= 0.0)
    throw ValidationError("x_variance must be positive");
  if (error_variance < 0.0)
    throw ValidationError("error_variance must be nonnegative");
  return beta * x_variance / (x_variance + error_variance);
}

// --- Monte Carlo verification harness ----------------------------------------

struct McReport {
  Vector mean_beta;          // empirical mean of beta~ over kept replicates
  Vector var_beta;           // empirical variance (per class)
  Vector se_mean_beta;       // standard error of mean_beta
  Vector mean_pred_counts;   // empirical mean of n~
  Vector var_pred_counts;
  Vector se_mean_pred_counts;
  Vector mean_signal_mass;   // empirical mean of n~ . beta~
  Vector var_signal_mass;
  Vector se_mean_signal_mass;
  std::int64_t replicates_requested = 0;
  std::int64_t replicates_used = 0;
  std::int64_t replicates_skipped = 0;  // some predicted class was empty
};

// Samples flows column-wise (every true-class member is independently sent
// to a predicted class per C's column), builds y = X beta + noise, and fits
// cell means on the proxy labels. Replicate streams are derived from
// (seed, replicate index) so results do not depend on evaluation order.
inline McReport mc_misclassification_oracle(const ConfusionMatrix& c,
                                            const std::vector<std::int64_t>& n,
                                            const Vector& beta, double noise_sd,
                                            std::int64_t replicates,
                                            std::uint64_t seed) {
  const int p = c.categories();
  if (static_cast<int>(n.size()) != p || static_cast<int>(beta.size()) != p)
    throw DimensionMismatch("n and beta must match the confusion matrix size");
  if (replicates < 1) throw ValidationError("replicates must be >= 1");
  for (auto v : n)
    if (v <= 0) throw ValidationError("true counts must be positive");
  if (noise_sd < 0.0) throw ValidationError("noise_sd must be nonnegative");

  // per-true-class sampling CDFs over predicted classes
  std::vector<Vector> cdf(p, Vector(p, 0.0));
  for (int k = 0; k < p; ++k) {
    double acc = 0.0;
    for (int j = 0; j < p; ++j) {
      acc += c(j, k);
      cdf[k][j] = acc;
    }
  }

  McReport rep;
  rep.replicates_requested = replicates;
  auto zero = [&] { return Vector(p, 0.0); };
  Vector mb = zero(), m2b = zero();
  Vector mc_ = zero(), m2c = zero();
  Vector mm = zero(), m2m = zero();

  Rng root(seed);
  std::vector<std::int64_t> counts(p);
  Vector mass(p);
  for (std::int64_t r = 0; r < replicates; ++r) {
    Rng rng = root.derive(static_cast<std::uint64_t>(r));
    std::fill(counts.begin(), counts.end(), 0);
    std::fill(mass.begin(), mass.end(), 0.0);
    for (int k = 0; k < p; ++k) {
      for (std::int64_t i = 0; i < n[k]; ++i) {
        const int j = rng.categorical_cdf(cdf[k]);
        counts[j] += 1;
        double yi = beta[k];
        if (noise_sd > 0.0) yi += noise_sd * rng.normal();
        mass[j] += yi;
      }
    }
    bool empty = false;
    for (int j = 0; j < p; ++j) empty |= counts[j] == 0;
    if (empty) {
      rep.replicates_skipped += 1;
      continue;
    }
    rep.replicates_used += 1;
    const double w = static_cast<double>(rep.replicates_used);
    for (int j = 0; j < p; ++j) {
      const double bj = mass[j] / static_cast<double>(counts[j]);
      const double cj = static_cast<double>(counts[j]);
      const double mj = mass[j];
      // Welford updates
      double d = bj - mb[j];
      mb[j] += d / w;
      m2b[j] += d * (bj - mb[j]);
      d = cj - mc_[j];
      mc_[j] += d / w;
      m2c[j] += d * (cj - mc_[j]);
      d = mj - mm[j];
      mm[j] += d / w;
      m2m[j] += d * (mj - mm[j]);
    }
  }
  if (rep.replicates_used == 0)
    throw NumericError("every Monte Carlo replicate had an empty predicted class");

  const double used = static_cast<double>(rep.replicates_used);
  auto finalize = [&](const Vector& m, const Vector& m2, Vector& mean, Vector& var,
                      Vector& se) {
    mean = m;
    var.resize(p);
    se.resize(p);
    for (int j = 0; j < p; ++j) {
      var[j] = used > 1.0 ? m2[j] / (used - 1.0) : 0.0;
      se[j] = std::sqrt(var[j] / used);
    }
  };
  finalize(mb, m2b, rep.mean_beta, rep.var_beta, rep.se_mean_beta);
  finalize(mc_, m2c, rep.mean_pred_counts, rep.var_pred_counts,
           rep.se_mean_pred_counts);
  finalize(mm, m2m, rep.mean_signal_mass, rep.var_signal_mass,
           rep.se_mean_signal_mass);
  return rep;
}

}  // namespace proxyaudit
