#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "proxyaudit/errors.hpp"
#include "proxyaudit/misclass.hpp"
#include "proxyaudit/regress.hpp"
#include "proxyaudit/synth.hpp"

namespace proxyaudit {

enum class ControlSet { None, Demo, DemoSes };

inline const char* to_string(ControlSet c) {
  switch (c) {
    case ControlSet::None: return "none";
    case ControlSet::Demo: return "demo";
    case ControlSet::DemoSes: return "demo+ses";
  }
  return "?";
}

namespace detail {

struct ControlColumns {
  std::vector<std::string> names;
  std::vector<Vector> columns;
};

inline ControlColumns build_controls(const std::vector<PopulationRecord>& records,
                                     ControlSet set) {
  ControlColumns out;
  if (set == ControlSet::None) return out;
  const std::size_t n = records.size();
  const auto& bands = age_band_labels();
  // age-band dummies (first band is the baseline) + gender dummy
  for (std::size_t b = 1; b < bands.size(); ++b) {
    Vector col(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      col[i] = records[i].age_band == static_cast<int>(b) ? 1.0 : 0.0;
    out.names.push_back("age:" + bands[b]);
    out.columns.push_back(std::move(col));
  }
  {
    Vector col(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) col[i] = records[i].gender == 1 ? 1.0 : 0.0;
    out.names.push_back("gender:M");
    out.columns.push_back(std::move(col));
  }
  if (set == ControlSet::DemoSes) {
    Vector med(n), pov(n), unemp(n);
    for (std::size_t i = 0; i < n; ++i) {
      med[i] = records[i].ses.medfaminc;
      pov[i] = records[i].ses.ppov;
      unemp[i] = records[i].ses.punemp;
    }
    out.names.push_back("MEDFAMINC");
    out.columns.push_back(std::move(med));
    out.names.push_back("PPOV");
    out.columns.push_back(std::move(pov));
    out.names.push_back("PUNEMP");
    out.columns.push_back(std::move(unemp));
  }
  return out;
}

}  // namespace detail

struct AdjustedPair {
  ControlSet controls = ControlSet::Demo;
  AdjustedDisparities reported;
  AdjustedDisparities proxy;
};

struct Exp1Report {
  int categories = 0;
  int reference = 0;
  Vector reported;  // cell-means coefficients on the reported labels
  Vector mixing;    // cell means of the reported fitted values on proxy labels
  Vector proxy;     // cell-means coefficients on the proxy labels
  std::vector<AdjustedPair> adjusted;
  RegressionFit reported_fit;  // reused by the ZIP-level aggregation

  double raw_disparity(const Vector& coef, int category) const {
    return coef[category] - coef[reference];
  }
};

// Three-regression mixing analysis. Step 1 fits the outcome on the reported
// labels; step 2 regresses that model's fitted values (never the raw
// outcome) on the proxy labels, recovering the noise-free mixing of group
// effects; step 3 regresses the raw outcome on the proxy labels. Adjusted
// variants are reference-coded with intercept and controls.
inline Exp1Report experiment1(const std::vector<PopulationRecord>& records,
                              const std::vector<int>& proxy_labels, int categories,
                              ControlSet controls = ControlSet::None,
                              int reference = -1) {
  if (records.size() != proxy_labels.size())
    throw AlignmentError("proxy labels not aligned with records: " +
                         std::to_string(proxy_labels.size()) + " vs " +
                         std::to_string(records.size()));
  if (records.empty()) throw ValidationError("no records");

  std::vector<int> true_labels(records.size());
  Vector y(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    true_labels[i] = records[i].true_race;
    y[i] = records[i].premium;
  }

  if (reference < 0) {
    std::vector<std::int64_t> counts(categories, 0);
    for (int l : true_labels) counts.at(l) += 1;
    reference = static_cast<int>(
        std::max_element(counts.begin(), counts.end()) - counts.begin());
  }

  Exp1Report rep;
  rep.categories = categories;
  rep.reference = reference;
  rep.reported_fit = fit_cell_means(true_labels, categories, y);
  rep.reported = rep.reported_fit.coefficients;
  rep.mixing =
      fit_cell_means(proxy_labels, categories, rep.reported_fit.fitted).coefficients;
  rep.proxy = fit_cell_means(proxy_labels, categories, y).coefficients;

  std::vector<ControlSet> sets;
  if (controls == ControlSet::Demo) sets = {ControlSet::Demo};
  if (controls == ControlSet::DemoSes) sets = {ControlSet::Demo, ControlSet::DemoSes};
  for (ControlSet set : sets) {
    detail::ControlColumns cc = detail::build_controls(records, set);
    AdjustedPair pair;
    pair.controls = set;
    pair.reported =
        adjusted_disparities(true_labels, categories, cc.columns, y, reference);
    pair.proxy =
        adjusted_disparities(proxy_labels, categories, cc.columns, y, reference);
    pair.reported.fit.design.control_columns = cc.names;
    pair.proxy.fit.design.control_columns = cc.names;
    rep.adjusted.push_back(std::move(pair));
  }
  return rep;
}

// One region x race cell of the Experiment 2 aggregation.
struct ZipRaceCell {
  std::string region;
  int race = 0;
  double n_true = 0.0;       // n_ik
  double n_pred = 0.0;       // n~_ik
  double deviation = 0.0;    // d_ik = n_i (n_ik/n_i - n_k/n)
  double displacement = 0.0; // r_ik = n~_ik - n_ik, proxy overcount of (i,k)
  double residual_sum = 0.0; // sum of reported-model residuals over (i,k)
};

// Exact tabulation of the deviation / displacement / residual-sum quantities.
// Regions are emitted in lexicographic key order, races in category order.
inline std::vector<ZipRaceCell> zip_aggregate(
    const std::vector<PopulationRecord>& records,
    const std::vector<int>& proxy_labels, int categories,
    const RegressionFit& reported_fit) {
  if (records.size() != proxy_labels.size())
    throw AlignmentError("proxy labels not aligned with records");
  if (reported_fit.residuals.size() != records.size())
    throw AlignmentError("reported fit was not produced on these records");

  std::map<std::string, int> region_index;
  for (const auto& rec : records) region_index.emplace(rec.region_key, 0);
  int idx = 0;
  for (auto& [key, value] : region_index) value = idx++;
  const int n_regions = idx;

  std::vector<double> region_total(n_regions, 0.0);
  std::vector<Vector> n_true(n_regions, Vector(categories, 0.0));
  std::vector<Vector> n_pred(n_regions, Vector(categories, 0.0));
  std::vector<Vector> resid(n_regions, Vector(categories, 0.0));
  Vector statewide(categories, 0.0);
  double total = 0.0;

  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    const int g = region_index.at(rec.region_key);
    const int t = rec.true_race;
    const int p = proxy_labels[i];
    if (t < 0 || t >= categories || p < 0 || p >= categories)
      throw ValidationError("label outside category range");
    region_total[g] += 1.0;
    n_true[g][t] += 1.0;
    n_pred[g][p] += 1.0;
    resid[g][t] += reported_fit.residuals[i];
    statewide[t] += 1.0;
    total += 1.0;
  }

  std::vector<ZipRaceCell> cells;
  cells.reserve(static_cast<std::size_t>(n_regions) * categories);
  for (const auto& [key, g] : region_index) {
    for (int k = 0; k < categories; ++k) {
      ZipRaceCell cell;
      cell.region = key;
      cell.race = k;
      cell.n_true = n_true[g][k];
      cell.n_pred = n_pred[g][k];
      cell.deviation = n_true[g][k] - region_total[g] * statewide[k] / total;
      cell.displacement = n_pred[g][k] - n_true[g][k];
      cell.residual_sum = resid[g][k];
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

struct Exp2DeviationFit {
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  Vector ses_coefficients;
  Vector eta;  // residuals, aligned with the race's region order
  double residual_se = 0.0;
};

struct Exp2ResidualFit {
  double gamma_d = 0.0;
  double gamma_e = 0.0;
  Vector ses_coefficients;
  Vector xi;
  double residual_se = 0.0;
};

struct Exp2RacePanel {
  int race = 0;
  std::vector<std::string> regions;
  Exp2DeviationFit deviation_baseline;
  std::optional<Exp2DeviationFit> deviation_ses;
  // absent when eta is degenerate (misclassification exactly linear in the
  // deviation leaves no residual variation to regress on)
  std::optional<Exp2ResidualFit> residual_baseline;
  std::optional<Exp2ResidualFit> residual_ses;
};

struct Exp2Report {
  std::vector<Exp2RacePanel> panels;
};

// ZIP-level regressions, one race at a time. The deviation regression keeps
// its intercept; the residual regression is fit without one, as displayed,
// unless the optional intercept flag is set. The SES variant appends the
// region SES columns to both regressions and threads the matching eta.
inline Exp2Report experiment2(
    const std::vector<ZipRaceCell>& cells,
    const std::unordered_map<std::string, SesTriple>* ses = nullptr,
    std::vector<int> races = {}, bool eq23_intercept = false) {
  if (cells.empty()) throw ValidationError("no cells");

  std::map<int, std::vector<const ZipRaceCell*>> by_race;
  for (const auto& cell : cells) by_race[cell.race].push_back(&cell);

  if (races.empty()) {
    // default to the two largest groups by true count
    std::vector<std::pair<double, int>> sizes;
    for (const auto& [race, group] : by_race) {
      double n = 0.0;
      for (const auto* c : group) n += c->n_true;
      sizes.emplace_back(n, race);
    }
    std::sort(sizes.begin(), sizes.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (std::size_t i = 0; i < std::min<std::size_t>(2, sizes.size()); ++i)
      races.push_back(sizes[i].second);
    std::sort(races.begin(), races.end());
  }

  Exp2Report rep;
  for (int race : races) {
    auto it = by_race.find(race);
    if (it == by_race.end() || it->second.size() < 3)
      throw TooFewCells(race, it == by_race.end() ? 0 : it->second.size());
    const auto& group = it->second;
    const std::size_t m = group.size();

    Exp2RacePanel panel;
    panel.race = race;
    Vector d(m), r(m), eps(m);
    std::vector<Vector> ses_cols;
    for (std::size_t i = 0; i < m; ++i) {
      panel.regions.push_back(group[i]->region);
      d[i] = group[i]->deviation;
      r[i] = group[i]->displacement;
      eps[i] = group[i]->residual_sum;
    }
    if (ses) {
      ses_cols.assign(3, Vector(m));
      for (std::size_t i = 0; i < m; ++i) {
        auto sit = ses->find(group[i]->region);
        if (sit == ses->end())
          throw AlignmentError("no SES triple for region " + group[i]->region);
        ses_cols[0][i] = sit->second.medfaminc;
        ses_cols[1][i] = sit->second.ppov;
        ses_cols[2][i] = sit->second.punemp;
      }
    }

    auto fit_deviation = [&](bool with_ses) {
      const std::size_t q = 2 + (with_ses ? 3 : 0);
      Matrix x(m, q);
      for (std::size_t i = 0; i < m; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = d[i];
        if (with_ses)
          for (int c = 0; c < 3; ++c) x(i, 2 + c) = ses_cols[c][i];
      }
      RegressionFit fit = fit_ols(x, r);
      Exp2DeviationFit out;
      out.alpha0 = fit.coefficients[0];
      out.alpha1 = fit.coefficients[1];
      out.ses_coefficients.assign(fit.coefficients.begin() + 2,
                                  fit.coefficients.end());
      out.eta = fit.residuals;
      out.residual_se = std::sqrt(fit.residual_variance);
      return out;
    };
    auto fit_residual =
        [&](const Vector& eta, bool with_ses) -> std::optional<Exp2ResidualFit> {
      double eta_scale = 0.0, r_scale = 1.0;
      for (double e : eta) eta_scale = std::max(eta_scale, std::abs(e));
      for (double v : r) r_scale = std::max(r_scale, std::abs(v));
      if (eta_scale <= 1e-10 * r_scale) return std::nullopt;
      const std::size_t q = (eq23_intercept ? 1 : 0) + 2 + (with_ses ? 3 : 0);
      Matrix x(m, q);
      for (std::size_t i = 0; i < m; ++i) {
        std::size_t col = 0;
        if (eq23_intercept) x(i, col++) = 1.0;
        x(i, col++) = d[i];
        x(i, col++) = eta[i];
        if (with_ses)
          for (int c = 0; c < 3; ++c) x(i, col + c) = ses_cols[c][i];
      }
      RegressionFit fit = fit_ols(x, eps);
      Exp2ResidualFit out;
      const std::size_t base = eq23_intercept ? 1 : 0;
      out.gamma_d = fit.coefficients[base];
      out.gamma_e = fit.coefficients[base + 1];
      out.ses_coefficients.assign(fit.coefficients.begin() + base + 2,
                                  fit.coefficients.end());
      out.xi = fit.residuals;
      out.residual_se = std::sqrt(fit.residual_variance);
      return out;
    };

    panel.deviation_baseline = fit_deviation(false);
    panel.residual_baseline = fit_residual(panel.deviation_baseline.eta, false);
    if (ses) {
      panel.deviation_ses = fit_deviation(true);
      panel.residual_ses = fit_residual(panel.deviation_ses->eta, true);
    }
    rep.panels.push_back(std::move(panel));
  }
  return rep;
}

// End-to-end audit bundle: the three-regression analysis, the empirical flow
// and confusion structure of the proxy, the ZIP-level Experiment 2
// regressions, and the variance-shrinkage report evaluated at the empirical
// confusion matrix and reported-race effects.
struct AuditOutputs {
  Exp1Report exp1;
  FlowCounts flows;
  std::vector<ZipRaceCell> cells;
  Exp2Report exp2;
  ShrinkageReport shrinkage;
};

inline AuditOutputs run_audit(const std::vector<PopulationRecord>& records,
                              const std::vector<int>& proxy_labels, int categories,
                              ControlSet controls = ControlSet::None,
                              int reference = -1) {
  AuditOutputs out;
  out.exp1 = experiment1(records, proxy_labels, categories, controls, reference);

  std::vector<int> true_labels(records.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    true_labels[i] = records[i].true_race;
  out.flows = flows_from_labels(true_labels, proxy_labels, categories);

  out.cells = zip_aggregate(records, proxy_labels, categories, out.exp1.reported_fit);

  std::unordered_map<std::string, SesTriple> ses;
  for (const auto& rec : records) ses.emplace(rec.region_key, rec.ses);
  out.exp2 = experiment2(out.cells, &ses);

  ConfusionMatrix c = confusion_from_flows(out.flows);
  Vector n(categories);
  for (int k = 0; k < categories; ++k)
    n[k] = static_cast<double>(out.flows.true_counts[k]);
  out.shrinkage = shrinkage_report(c, n, out.exp1.reported);
  return out;
}

}  // namespace proxyaudit
