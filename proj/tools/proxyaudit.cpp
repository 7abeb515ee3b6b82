// proxyaudit: proxy-race inference, confusion-matrix diagnostics, and
// misclassification-bias auditing over delimited text files.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "proxyaudit/audit.hpp"
#include "proxyaudit/categories.hpp"
#include "proxyaudit/io.hpp"
#include "proxyaudit/misclass.hpp"
#include "proxyaudit/proxy.hpp"
#include "proxyaudit/regress.hpp"
#include "proxyaudit/synth.hpp"

namespace pa = proxyaudit;
namespace fs = std::filesystem;

namespace {

struct CommonOpts {
  std::string labels = "Asian,Black,Hispanic,Others,White";
  std::string out_dir = ".";
  std::string format = "table";
  double tol = 1e-9;
  double smoothing = 0.0;
};

pa::CategorySet parse_labels(const std::string& csv) {
  std::vector<std::string> labels;
  std::string cur;
  for (char ch : csv) {
    if (ch == ',') {
      labels.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  labels.push_back(cur);
  return pa::CategorySet(labels);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Canonical flag string -> stable config hash embedded in report headers.
struct ConfigStamp {
  std::string text;

  void add(const std::string& key, const std::string& value) {
    text += "|" + key + "=" + value;
  }
  void add(const std::string& key, double value) { add(key, pa::io::fmt_g17(value)); }
  void add(const std::string& key, std::int64_t value) {
    add(key, std::to_string(value));
  }

  std::string comment(std::uint64_t seed) const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(text)));
    return "config_hash=" + std::string(buf) + " seed=" + std::to_string(seed);
  }
};

std::string out_path(const CommonOpts& opts, const std::string& name) {
  fs::create_directories(opts.out_dir);
  return (fs::path(opts.out_dir) / name).string();
}

struct ScenarioOpts {
  std::string preset = "default";
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::optional<int> regions;
  std::optional<int> region_pop;
  std::optional<double> homogeneity;
  std::optional<double> sharpness;
  std::optional<double> ses_confounding;
  std::optional<double> noise;
  std::string plant_beta;  // comma-separated, plants a direct race effect

  void register_flags(CLI::App* cmd) {
    cmd->add_option("--scenario", preset, "Scenario preset: default or confounded")
        ->check(CLI::IsMember({"default", "confounded"}));
    cmd->add_option("--seed", seed, "Generator seed (required)")
        ->required()
        ->each([this](const std::string&) { seed_set = true; });
    cmd->add_option("--regions", regions, "Region count override");
    cmd->add_option("--region-pop", region_pop, "Mean region population override");
    cmd->add_option("--homogeneity", homogeneity,
                    "Racial-composition dial in [0,1]");
    cmd->add_option("--sharpness", sharpness, "Name informativeness in [0,1]");
    cmd->add_option("--ses-confounding", ses_confounding,
                    "Composition-SES link strength");
    cmd->add_option("--noise", noise, "Premium noise standard deviation");
    cmd->add_option("--plant-beta", plant_beta,
                    "Comma-separated per-race premium effects planted directly");
  }

  pa::ScenarioConfig build(const pa::CategorySet& races, ConfigStamp& stamp) const {
    pa::ScenarioConfig cfg = preset == "confounded"
                                 ? pa::ScenarioConfig::confounded_scenario(seed)
                                 : pa::ScenarioConfig::default_scenario(seed);
    if (races.size() != cfg.races.size())
      cfg.statewide_shares.assign(races.size(), 1.0 / races.size());
    cfg.races = races;
    cfg.premium.group_effects.assign(races.size(), 0.0);
    if (regions) cfg.region_count = *regions;
    if (region_pop) cfg.mean_region_population = *region_pop;
    if (homogeneity) cfg.homogeneity = *homogeneity;
    if (sharpness) cfg.name_sharpness = *sharpness;
    if (ses_confounding) cfg.ses_confounding = *ses_confounding;
    if (noise) cfg.premium.noise_sd = *noise;
    if (!plant_beta.empty()) {
      std::vector<std::string> parts;
      std::string cur;
      for (char ch : plant_beta) {
        if (ch == ',') {
          parts.push_back(cur);
          cur.clear();
        } else {
          cur.push_back(ch);
        }
      }
      parts.push_back(cur);
      if (static_cast<int>(parts.size()) != races.size())
        throw pa::InvalidConfig("plant-beta", "needs one value per race label");
      for (int r = 0; r < races.size(); ++r)
        cfg.premium.group_effects[r] = std::stod(parts[r]);
      cfg.premium.direct_race_effect = true;
    }
    stamp.add("scenario", preset);
    stamp.add("seed", static_cast<std::int64_t>(seed));
    stamp.add("regions", static_cast<std::int64_t>(cfg.region_count));
    stamp.add("region_pop", static_cast<std::int64_t>(cfg.mean_region_population));
    stamp.add("homogeneity", cfg.homogeneity);
    stamp.add("sharpness", cfg.name_sharpness);
    stamp.add("ses_confounding", cfg.ses_confounding);
    stamp.add("noise", cfg.premium.noise_sd);
    if (!plant_beta.empty()) stamp.add("plant_beta", plant_beta);
    cfg.validate();
    return cfg;
  }
};

struct InferenceResult {
  std::vector<std::int64_t> ids;
  std::vector<pa::ProxyPosterior> posteriors;
  std::int64_t unknown_regions = 0;
};

InferenceResult infer_records(const std::vector<pa::PopulationRecord>& records,
                              const pa::ProxyTables& tables) {
  InferenceResult result;
  result.ids.reserve(records.size());
  result.posteriors.reserve(records.size());
  for (const auto& rec : records) {
    if (!tables.geo.has_region(rec.region_key)) {
      result.unknown_regions += 1;
      continue;
    }
    result.ids.push_back(rec.id);
    result.posteriors.push_back(pa::infer_individual(
        {rec.surname_key, rec.first_key, rec.region_key}, tables));
  }
  return result;
}

pa::ProxyTables load_tables(const std::string& surname_path,
                            const std::string& first_path,
                            const std::string& geo_path,
                            const pa::CategorySet& races, double smoothing) {
  pa::ProxyTables tables;
  tables.surnames = pa::io::read_surname_table(surname_path, races, smoothing);
  tables.firstnames = pa::io::read_first_table(first_path, races, smoothing);
  tables.geo = pa::io::read_geo_table(geo_path, races, smoothing);
  return tables;
}

void emit_exp1_tables(const pa::CategorySet& races, const pa::Exp1Report& rep) {
  std::vector<std::vector<std::string>> rows;
  for (int r = 0; r < races.size(); ++r) {
    if (r == rep.reference) continue;
    rows.push_back({races.label(r),
                    pa::io::fmt_fixed(rep.raw_disparity(rep.reported, r), 3),
                    pa::io::fmt_fixed(rep.raw_disparity(rep.mixing, r), 3),
                    pa::io::fmt_fixed(rep.raw_disparity(rep.proxy, r), 3)});
  }
  std::cout << "Raw pricing disparities (vs " << races.label(rep.reference)
            << ")\n"
            << pa::io::render_named_table(
                   {"Race Group", "Reported Race", "Proxy-Induced Mixing",
                    "Proxy Race"},
                   rows)
            << "\n";
  if (!rep.adjusted.empty()) {
    rows.clear();
    for (int r = 0; r < races.size(); ++r) {
      if (r == rep.reference) continue;
      std::vector<std::string> row{races.label(r)};
      for (const auto& pair : rep.adjusted)
        row.push_back(pa::io::fmt_fixed(pair.reported.disparity.at(r), 3));
      for (const auto& pair : rep.adjusted)
        row.push_back(pa::io::fmt_fixed(pair.proxy.disparity.at(r), 3));
      rows.push_back(std::move(row));
    }
    std::vector<std::string> head{"Race Group"};
    for (const auto& pair : rep.adjusted)
      head.push_back(std::string("Reported/") + pa::to_string(pair.controls));
    for (const auto& pair : rep.adjusted)
      head.push_back(std::string("Proxy/") + pa::to_string(pair.controls));
    std::cout << "Adjusted pricing disparities\n"
              << pa::io::render_named_table(head, rows) << "\n";
  }
}

void emit_exp2_table(const pa::CategorySet& races, const pa::Exp2Report& rep) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& panel : rep.panels) {
    auto add = [&](const char* regression, const char* controls, const char* term,
                   double value) {
      rows.push_back({races.label(panel.race), regression, controls, term,
                      pa::io::fmt_fixed(value, 4)});
    };
    add("deviation", "baseline", "alpha0", panel.deviation_baseline.alpha0);
    add("deviation", "baseline", "alpha1", panel.deviation_baseline.alpha1);
    if (panel.deviation_ses) {
      add("deviation", "ses", "alpha0", panel.deviation_ses->alpha0);
      add("deviation", "ses", "alpha1", panel.deviation_ses->alpha1);
    }
    if (panel.residual_baseline) {
      add("residual", "baseline", "gamma_d", panel.residual_baseline->gamma_d);
      add("residual", "baseline", "gamma_e", panel.residual_baseline->gamma_e);
    }
    if (panel.residual_ses) {
      add("residual", "ses", "gamma_d", panel.residual_ses->gamma_d);
      add("residual", "ses", "gamma_e", panel.residual_ses->gamma_e);
    }
  }
  std::cout << "ZIP-level deviation and residual regressions\n"
            << pa::io::render_named_table(
                   {"Race", "Regression", "Controls", "Term", "Value"}, rows)
            << "\n";
}

int run(int argc, char** argv) {
  CLI::App app{"Proxy-race inference and misclassification-bias auditing"};
  app.require_subcommand(1);

  // ---- infer / classify -----------------------------------------------------
  CommonOpts infer_opts;
  std::string in_surname, in_first, in_geo, in_microdata;
  auto add_common = [](CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--labels", opts.labels, "Category labels, in order");
    cmd->add_option("--out", opts.out_dir, "Output directory");
    cmd->add_option("--format", opts.format, "table or csv")
        ->check(CLI::IsMember({"table", "csv"}));
    cmd->add_option("--tol", opts.tol, "Check tolerance");
    cmd->add_option("--smoothing", opts.smoothing,
                    "Additive smoothing applied to table entries on load");
  };
  auto add_table_inputs = [&](CLI::App* cmd) {
    cmd->add_option("--surname-table", in_surname, "Surname table file")->required();
    cmd->add_option("--first-table", in_first, "First-name table file")->required();
    cmd->add_option("--geo-table", in_geo, "Geo table file")->required();
    cmd->add_option("--microdata", in_microdata, "Microdata file")->required();
  };
  CLI::App* cmd_infer = app.add_subcommand("infer", "Emit posterior race probabilities");
  add_common(cmd_infer, infer_opts);
  add_table_inputs(cmd_infer);
  CLI::App* cmd_classify =
      app.add_subcommand("classify", "Emit max-classification labels");
  add_common(cmd_classify, infer_opts);
  add_table_inputs(cmd_classify);

  // ---- confusion --------------------------------------------------------------
  CommonOpts conf_opts;
  std::string conf_data, true_col = "true", pred_col = "pred";
  CLI::App* cmd_confusion =
      app.add_subcommand("confusion", "Cross-tabulate true vs predicted labels");
  add_common(cmd_confusion, conf_opts);
  cmd_confusion->add_option("--data", conf_data, "Labeled data file")->required();
  cmd_confusion->add_option("--true-col", true_col, "Reference label column");
  cmd_confusion->add_option("--pred-col", pred_col, "Prediction label column");

  // ---- bias / shrinkage / simulate ---------------------------------------------
  CommonOpts bias_opts, shrink_opts, sim_opts;
  std::string bias_confusion, bias_counts, bias_beta;
  CLI::App* cmd_bias = app.add_subcommand(
      "bias", "Expected proxy estimator and bias from a confusion matrix");
  add_common(cmd_bias, bias_opts);
  cmd_bias->add_option("--confusion", bias_confusion, "Confusion matrix file")
      ->required();
  cmd_bias->add_option("--counts", bias_counts, "True count file")->required();
  cmd_bias->add_option("--beta", bias_beta, "Effect vector file")->required();

  std::string shr_confusion, shr_counts, shr_beta;
  CLI::App* cmd_shrinkage =
      app.add_subcommand("shrinkage", "Variance-shrinkage report");
  add_common(cmd_shrinkage, shrink_opts);
  cmd_shrinkage->add_option("--confusion", shr_confusion, "Confusion matrix file")
      ->required();
  cmd_shrinkage->add_option("--counts", shr_counts, "True count file")->required();
  cmd_shrinkage->add_option("--beta", shr_beta, "Effect vector file")->required();

  std::string sim_confusion, sim_counts, sim_beta;
  double sim_noise = 0.0;
  std::int64_t sim_replicates = 10000;
  std::uint64_t sim_seed = 0;
  CLI::App* cmd_simulate = app.add_subcommand(
      "simulate", "Monte Carlo verification of the expectation identities");
  add_common(cmd_simulate, sim_opts);
  cmd_simulate->add_option("--confusion", sim_confusion, "Confusion matrix file")
      ->required();
  cmd_simulate->add_option("--counts", sim_counts, "True count file")->required();
  cmd_simulate->add_option("--beta", sim_beta, "Effect vector file")->required();
  cmd_simulate->add_option("--noise", sim_noise, "Outcome noise SD");
  cmd_simulate->add_option("--replicates", sim_replicates, "Replicates");
  cmd_simulate->add_option("--seed", sim_seed, "Monte Carlo seed")->required();

  // ---- audit -------------------------------------------------------------------
  CommonOpts audit_opts;
  ScenarioOpts audit_scenario;
  std::string audit_microdata, audit_pred_col, audit_controls = "none";
  std::string audit_reference;
  std::string audit_surname, audit_first, audit_geo;
  CLI::App* cmd_audit =
      app.add_subcommand("audit", "Run the experiment pipelines end to end");
  add_common(cmd_audit, audit_opts);
  cmd_audit->add_option("--microdata", audit_microdata,
                        "Microdata file (instead of a generated scenario)");
  cmd_audit->add_option("--pred-col", audit_pred_col,
                        "Column holding precomputed proxy labels");
  cmd_audit->add_option("--surname-table", audit_surname, "Surname table file");
  cmd_audit->add_option("--first-table", audit_first, "First-name table file");
  cmd_audit->add_option("--geo-table", audit_geo, "Geo table file");
  cmd_audit->add_option("--controls", audit_controls, "none, demo, or demo+ses")
      ->check(CLI::IsMember({"none", "demo", "demo+ses"}));
  cmd_audit->add_option("--reference", audit_reference,
                        "Reference category label (default: largest group)");
  audit_scenario.register_flags(cmd_audit);

  // ---- generate ------------------------------------------------------------------
  CommonOpts gen_opts;
  ScenarioOpts gen_scenario;
  CLI::App* cmd_generate =
      app.add_subcommand("generate", "Generate a synthetic population");
  add_common(cmd_generate, gen_opts);
  gen_scenario.register_flags(cmd_generate);

  CLI11_PARSE(app, argc, argv);

  // ---- dispatch -------------------------------------------------------------------
  if (app.got_subcommand(cmd_infer) || app.got_subcommand(cmd_classify)) {
    const bool classify = app.got_subcommand(cmd_classify);
    const pa::CategorySet races = parse_labels(infer_opts.labels);
    const pa::ProxyTables tables =
        load_tables(in_surname, in_first, in_geo, races, infer_opts.smoothing);
    std::vector<pa::PopulationRecord> records =
        pa::io::read_population(in_microdata, races);
    for (auto& rec : records) {
      rec.surname_key = pa::normalize_name_key(rec.surname_key);
      rec.first_key = pa::normalize_name_key(rec.first_key);
    }
    const InferenceResult result = infer_records(records, tables);
    if (classify) {
      pa::io::CsvWriter w(out_path(infer_opts, "classified.csv"));
      w.row({"id", "predicted", "tie_broken"});
      for (std::size_t i = 0; i < result.posteriors.size(); ++i)
        w.row({std::to_string(result.ids[i]),
               races.label(result.posteriors[i].argmax),
               result.posteriors[i].tie_broken ? "1" : "0"});
    } else {
      pa::io::write_posteriors(out_path(infer_opts, "posteriors.csv"), races,
                               result.ids, result.posteriors);
    }
    if (result.unknown_regions > 0)
      std::cerr << "note: skipped " << result.unknown_regions
                << " records with unknown region keys\n";
    return 0;
  }

  if (app.got_subcommand(cmd_confusion)) {
    const pa::CategorySet races = parse_labels(conf_opts.labels);
    std::vector<std::vector<std::int64_t>> cells(
        races.size(), std::vector<std::int64_t>(races.size(), 0));
    int true_idx = -1, pred_idx = -1;
    pa::io::for_each_csv_row(
        conf_data,
        [&](const std::vector<std::string_view>& header) {
          for (std::size_t i = 0; i < header.size(); ++i) {
            if (std::string(header[i]) == true_col) true_idx = static_cast<int>(i);
            if (std::string(header[i]) == pred_col) pred_idx = static_cast<int>(i);
          }
          if (true_idx < 0)
            throw pa::ValidationError(conf_data + ": missing column '" + true_col +
                                      "'");
          if (pred_idx < 0)
            throw pa::ValidationError(conf_data + ": missing column '" + pred_col +
                                      "'");
        },
        [&](std::size_t lineno, const std::vector<std::string_view>& fields) {
          const int t = races.index_of(std::string(fields[true_idx]));
          const int p = races.index_of(std::string(fields[pred_idx]));
          if (t < 0)
            throw pa::ParseError(conf_data, lineno, "unknown reference label '" +
                                                        std::string(fields[true_idx]) +
                                                        "'");
          if (p < 0)
            throw pa::ParseError(conf_data, lineno, "unknown prediction label '" +
                                                        std::string(fields[pred_idx]) +
                                                        "'");
          cells[p][t] += 1;
        });
    const pa::FlowCounts flows = pa::flows_from_counts(std::move(cells));
    pa::io::write_flows(out_path(conf_opts, "flows.csv"), races, flows);
    pa::io::write_confusion(out_path(conf_opts, "confusion.csv"), races,
                            pa::confusion_from_flows(flows));
    pa::io::write_precision(out_path(conf_opts, "precision.csv"), races, flows);
    if (conf_opts.format == "table")
      std::cout << pa::io::render_confusion_table(races, flows);
    return 0;
  }

  if (app.got_subcommand(cmd_bias) || app.got_subcommand(cmd_shrinkage)) {
    const bool shrink = app.got_subcommand(cmd_shrinkage);
    CommonOpts& opts = shrink ? shrink_opts : bias_opts;
    const std::string& c_path = shrink ? shr_confusion : bias_confusion;
    const std::string& n_path = shrink ? shr_counts : bias_counts;
    const std::string& b_path = shrink ? shr_beta : bias_beta;
    const pa::CategorySet races = parse_labels(opts.labels);
    const pa::ConfusionMatrix c = pa::io::read_confusion(c_path, races);
    const pa::Vector n = pa::io::read_label_values(n_path, races, "count");
    const pa::Vector beta = pa::io::read_label_values(b_path, races, "beta");

    ConfigStamp stamp;
    stamp.add("cmd", shrink ? "shrinkage" : "bias");
    stamp.add("labels", opts.labels);
    stamp.add("tol", opts.tol);

    if (shrink) {
      const pa::ShrinkageReport rep = pa::shrinkage_report(c, n, beta, opts.tol);
      pa::io::write_shrinkage_csv(out_path(opts, "shrinkage_report.csv"), rep,
                                  stamp.comment(0));
      if (opts.format == "table") {
        std::cout << "ss_true    " << pa::io::fmt_fixed(rep.ss_true, 3) << "\n"
                  << "ss_proxy   " << pa::io::fmt_fixed(rep.ss_proxy, 3) << "\n"
                  << "neutral    " << (rep.neutral ? "yes" : "no") << "\n"
                  << "reversible " << (rep.reversible ? "yes" : "no") << "\n";
        if (rep.eigenvalues) {
          std::cout << "eigenvalues";
          for (double lam : *rep.eigenvalues)
            std::cout << " " << pa::io::fmt_fixed(lam, 6);
          std::cout << "\n";
        }
      }
      return 0;
    }

    const auto neutrality = pa::check_neutrality(c, n, opts.tol);
    const pa::Vector roe = pa::roe_expected_beta(c, n, beta);
    const auto bias = pa::expected_bias(c, n, beta, opts.tol);
    pa::io::CsvWriter w(out_path(opts, "bias_report.csv"), stamp.comment(0));
    w.row({"label", "beta", "expected_beta", "bias", "neutral_form_bias"});
    for (int r = 0; r < races.size(); ++r)
      w.row({races.label(r), pa::io::fmt_g17(beta[r]), pa::io::fmt_g17(roe[r]),
             pa::io::fmt_g17(bias.bias[r]),
             bias.neutral_form ? pa::io::fmt_g17((*bias.neutral_form)[r]) : ""});
    w.row({"neutrality_ok", neutrality.neutral ? "1" : "0", "", "", ""});
    w.row({"max_neutral_deviation",
           pa::io::fmt_g17(neutrality.max_relative_deviation), "", "", ""});
    if (opts.format == "table") {
      std::vector<std::vector<std::string>> rows;
      for (int r = 0; r < races.size(); ++r)
        rows.push_back({races.label(r), pa::io::fmt_fixed(beta[r], 3),
                        pa::io::fmt_fixed(roe[r], 3),
                        pa::io::fmt_fixed(bias.bias[r], 3)});
      std::cout << pa::io::render_named_table(
          {"Label", "Beta", "Expected", "Bias"}, rows);
      if (!neutrality.neutral)
        std::cout << "neutrality check failed, max relative deviation "
                  << pa::io::fmt_g17(neutrality.max_relative_deviation) << "\n";
    }
    return 0;
  }

  if (app.got_subcommand(cmd_simulate)) {
    const pa::CategorySet races = parse_labels(sim_opts.labels);
    const pa::ConfusionMatrix c = pa::io::read_confusion(sim_confusion, races);
    const pa::Vector n_real = pa::io::read_label_values(sim_counts, races, "count");
    const pa::Vector beta = pa::io::read_label_values(sim_beta, races, "beta");
    std::vector<std::int64_t> n(races.size());
    for (int r = 0; r < races.size(); ++r) {
      n[r] = static_cast<std::int64_t>(std::llround(n_real[r]));
      if (n[r] <= 0 || std::abs(n_real[r] - static_cast<double>(n[r])) > 1e-9)
        throw pa::ValidationError("simulate requires positive integer counts");
    }
    ConfigStamp stamp;
    stamp.add("cmd", "simulate");
    stamp.add("labels", sim_opts.labels);
    stamp.add("noise", sim_noise);
    stamp.add("replicates", sim_replicates);
    stamp.add("seed", static_cast<std::int64_t>(sim_seed));

    const pa::McReport mc = pa::mc_misclassification_oracle(
        c, n, beta, sim_noise, sim_replicates, sim_seed);
    const pa::Vector roe = pa::roe_expected_beta(c, n_real, beta);
    const pa::Vector en = pa::expected_counts(c, n_real);
    const pa::Vector emass = pa::expected_signal_mass(c, n_real, beta);
    pa::io::write_mc_csv(out_path(sim_opts, "simulate_report.csv"), races, mc, roe,
                         en, emass, stamp.comment(sim_seed));
    if (sim_opts.format == "table") {
      std::vector<std::vector<std::string>> rows;
      for (int r = 0; r < races.size(); ++r) {
        const double z = (mc.mean_beta[r] - roe[r]) /
                         (mc.se_mean_beta[r] > 0 ? mc.se_mean_beta[r] : 1.0);
        rows.push_back({races.label(r), pa::io::fmt_fixed(mc.mean_beta[r], 6),
                        pa::io::fmt_fixed(mc.se_mean_beta[r], 6),
                        pa::io::fmt_fixed(roe[r], 6), pa::io::fmt_fixed(z, 2)});
      }
      std::cout << pa::io::render_named_table(
          {"Label", "MC mean", "SE", "ROE", "z"}, rows);
      std::cout << "replicates used " << mc.replicates_used << ", skipped "
                << mc.replicates_skipped << "\n";
    }
    return 0;
  }

  if (app.got_subcommand(cmd_audit)) {
    const pa::CategorySet races = parse_labels(audit_opts.labels);
    ConfigStamp stamp;
    stamp.add("cmd", "audit");
    stamp.add("labels", audit_opts.labels);
    stamp.add("controls", audit_controls);

    std::vector<pa::PopulationRecord> records;
    std::vector<int> proxy_labels;
    std::uint64_t seed = 0;
    if (!audit_microdata.empty()) {
      records = pa::io::read_population(audit_microdata, races);
      stamp.add("microdata", audit_microdata);
      if (!audit_pred_col.empty()) {
        // proxy labels already present as a column
        const pa::io::Csv csv = pa::io::read_csv(audit_microdata);
        const int col = csv.column(audit_pred_col, audit_microdata);
        for (std::size_t i = 0; i < csv.rows.size(); ++i) {
          const int p = races.index_of(csv.rows[i][col]);
          if (p < 0)
            throw pa::ValidationError(audit_microdata + ": unknown proxy label '" +
                                      csv.rows[i][col] + "'");
          proxy_labels.push_back(p);
        }
      } else {
        if (audit_surname.empty() || audit_first.empty() || audit_geo.empty())
          throw pa::ValidationError(
              "audit on microdata needs either --pred-col or the three proxy "
              "tables");
        const pa::ProxyTables tables = load_tables(
            audit_surname, audit_first, audit_geo, races, audit_opts.smoothing);
        for (const auto& rec : records)
          proxy_labels.push_back(pa::max_classify(pa::infer_individual(
              {rec.surname_key, rec.first_key, rec.region_key}, tables)));
      }
    } else {
      const pa::ScenarioConfig cfg = audit_scenario.build(races, stamp);
      seed = cfg.seed;
      const pa::SyntheticPopulation pop = pa::generate_population(cfg);
      records = pop.records;
      proxy_labels.reserve(records.size());
      for (const auto& rec : records)
        proxy_labels.push_back(pa::max_classify(pa::infer_individual(
            {rec.surname_key, rec.first_key, rec.region_key}, pop.tables)));
    }

    pa::ControlSet controls = pa::ControlSet::None;
    if (audit_controls == "demo") controls = pa::ControlSet::Demo;
    if (audit_controls == "demo+ses") controls = pa::ControlSet::DemoSes;
    int reference = -1;
    if (!audit_reference.empty()) reference = races.require(audit_reference);

    const pa::AuditOutputs out =
        pa::run_audit(records, proxy_labels, races.size(), controls, reference);
    const std::string comment = stamp.comment(seed);
    pa::io::write_exp1_csv(out_path(audit_opts, "exp1_report.csv"), races, out.exp1,
                           comment);
    pa::io::write_zip_cells_csv(out_path(audit_opts, "zip_cells.csv"), races,
                                out.cells, comment);
    pa::io::write_exp2_csv(out_path(audit_opts, "exp2_report.csv"), races, out.exp2,
                           comment);
    pa::io::write_shrinkage_csv(out_path(audit_opts, "shrinkage_report.csv"),
                                out.shrinkage, comment);
    pa::io::write_flows(out_path(audit_opts, "flows.csv"), races, out.flows,
                        comment);
    pa::io::write_confusion(out_path(audit_opts, "confusion.csv"), races,
                            pa::confusion_from_flows(out.flows), comment);
    pa::io::write_precision(out_path(audit_opts, "precision.csv"), races, out.flows,
                            comment);
    if (audit_opts.format == "table") {
      std::cout << pa::io::render_confusion_table(races, out.flows) << "\n";
      emit_exp1_tables(races, out.exp1);
      emit_exp2_table(races, out.exp2);
      std::cout << "shrinkage: ss_true "
                << pa::io::fmt_fixed(out.shrinkage.ss_true, 3) << ", ss_proxy "
                << pa::io::fmt_fixed(out.shrinkage.ss_proxy, 3) << ", neutral "
                << (out.shrinkage.neutral ? "yes" : "no") << ", reversible "
                << (out.shrinkage.reversible ? "yes" : "no") << "\n";
    }
    return 0;
  }

  if (app.got_subcommand(cmd_generate)) {
    const pa::CategorySet races = parse_labels(gen_opts.labels);
    ConfigStamp stamp;
    stamp.add("cmd", "generate");
    stamp.add("labels", gen_opts.labels);
    const pa::ScenarioConfig cfg = gen_scenario.build(races, stamp);
    const pa::SyntheticPopulation pop = pa::generate_population(cfg);
    pa::io::write_population(out_path(gen_opts, "population.csv"), races,
                             pop.records);
    pa::io::write_surname_table(out_path(gen_opts, "surname_table.csv"), races,
                                pop.tables.surnames);
    pa::io::write_first_table(out_path(gen_opts, "first_table.csv"), races,
                              pop.tables.firstnames);
    pa::io::write_geo_table(out_path(gen_opts, "geo_table.csv"), races,
                            pop.tables.geo);
    if (gen_opts.format == "table")
      std::cout << "generated " << pop.records.size() << " records in "
                << pop.regions.size() << " regions\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const pa::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const pa::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const pa::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
}
