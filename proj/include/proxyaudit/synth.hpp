#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "proxyaudit/categories.hpp"
#include "proxyaudit/errors.hpp"
#include "proxyaudit/proxy.hpp"
#include "proxyaudit/rng.hpp"

namespace proxyaudit {

struct SesTriple {
  double medfaminc = 0.0;
  double ppov = 0.0;
  double punemp = 0.0;
};

// One synthetic individual, following the roles of the ingested microdata
// schema (region, names, reported race, age band, gender, premium, region SES).
struct PopulationRecord {
  std::int64_t id = 0;
  int true_race = 0;
  std::string surname_key;
  std::string first_key;
  std::string region_key;
  int region_index = 0;
  int age_band = 0;  // index into age_band_labels()
  int gender = 0;    // 0 = F, 1 = M
  double premium = 0.0;
  SesTriple ses;
};

inline const std::vector<std::string>& age_band_labels() {
  static const std::vector<std::string> bands = {
      "18",    "19",    "20",    "21",    "22",    "23",
      "24",    "25-29", "30-34", "35-39", "40-44", "45-49",
      "50-54", "55-59", "60-64", "65-69", "70-74", "75"};
  return bands;
}

struct RegionProfile {
  std::string key;
  int population = 0;
  Vector shares;            // racial mix of the region
  int lean_race = 0;
  double lean = 0.0;        // 0 = statewide mix, 1 = single race
  double affluence = 0.0;   // SES axis driving the triple
  double latent_risk = 0.0; // unmeasured factor; hits premiums and name matching
  SesTriple ses;
  double premium_effect = 0.0;
  double unmatched_rate = 0.0;       // both name keys unresolvable
  double first_unmatched_rate = 0.0; // only the first name unresolvable
};

struct PremiumModel {
  double base = 118.0;
  Vector age_effects;           // one entry per age band
  double gender_effect = 9.0;   // added when gender == M
  double ses_effect = 25.0;     // scales the region affluence axis (negated)
  double latent_risk_effect = 0.0;  // scales the unmeasured region factor
  Vector group_effects;         // per-race effect vector
  bool direct_race_effect = false;  // plant group_effects directly into premiums
  double noise_sd = 5.0;

  static Vector default_age_effects() {
    Vector v(age_band_labels().size());
    const double top = 60.0;
    for (std::size_t b = 0; b < v.size(); ++b)
      v[b] = top * static_cast<double>(v.size() - 1 - b) /
             static_cast<double>(v.size() - 1);
    return v;
  }
};

struct ScenarioConfig {
  CategorySet races = CategorySet::default_races();
  Vector statewide_shares = {0.02, 0.23, 0.05, 0.03, 0.67};
  int region_count = 100;
  int mean_region_population = 2000;
  double population_jitter = 0.5;  // region sizes span mean*(1 +- jitter)
  double homogeneity = 0.6;     // per-region racial-composition dial
  double name_sharpness = 0.7;  // 1 = names uniquely identify race
  int surnames_per_race = 40;
  int firstnames_per_race = 30;
  double ses_confounding = 0.8;  // strength of the composition-SES link
  double ses_noise = 0.15;
  double unmatched_rate_base = 0.0;  // name-dropout channel, off by default
  double unmatched_rate_span = 0.0;  // extra dropout tied to lean and latent risk
  double deprivation_dropout = 0.0;  // extra dropout per unit of region deprivation
  PremiumModel premium;
  std::uint64_t seed = 0;

  void validate() const;

  static ScenarioConfig default_scenario(std::uint64_t seed) {
    ScenarioConfig cfg;
    cfg.seed = seed;
    cfg.premium.age_effects = PremiumModel::default_age_effects();
    cfg.premium.group_effects.assign(cfg.races.size(), 0.0);
    return cfg;
  }

  // Scenario with the structured-error channels switched on: SES tracks
  // racial extremity, and an unmeasured region factor both shifts premiums
  // and degrades name matching (more so in homogeneous regions).
  static ScenarioConfig confounded_scenario(std::uint64_t seed) {
    ScenarioConfig cfg = default_scenario(seed);
    cfg.homogeneity = 0.7;
    cfg.name_sharpness = 0.65;
    cfg.mean_region_population = 1000;
    cfg.population_jitter = 0.1;
    cfg.ses_confounding = 1.0;
    cfg.unmatched_rate_base = 0.02;
    cfg.unmatched_rate_span = 0.40;
    cfg.deprivation_dropout = 0.60;
    cfg.premium.latent_risk_effect = 12.0;
    return cfg;
  }
};

inline void ScenarioConfig::validate() const {
  const int p = races.size();
  if (static_cast<int>(statewide_shares.size()) != p)
    throw InvalidConfig("statewide_shares", "length must match race set");
  double sum = 0.0;
  for (double s : statewide_shares) {
    if (s < 0.0) throw InvalidConfig("statewide_shares", "negative share");
    sum += s;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw InvalidConfig("statewide_shares", "must sum to 1");
  if (region_count < 1) throw InvalidConfig("region_count", "must be >= 1");
  if (mean_region_population < 1)
    throw InvalidConfig("mean_region_population", "must be >= 1");
  if (population_jitter < 0.0 || population_jitter >= 1.0)
    throw InvalidConfig("population_jitter", "must be in [0,1)");
  if (homogeneity < 0.0 || homogeneity > 1.0)
    throw InvalidConfig("homogeneity", "must be in [0,1]");
  if (name_sharpness < 0.0 || name_sharpness > 1.0)
    throw InvalidConfig("name_sharpness", "must be in [0,1]");
  if (surnames_per_race < 1) throw InvalidConfig("surnames_per_race", "must be >= 1");
  if (firstnames_per_race < 1)
    throw InvalidConfig("firstnames_per_race", "must be >= 1");
  if (ses_confounding < 0.0) throw InvalidConfig("ses_confounding", "must be >= 0");
  if (ses_noise < 0.0) throw InvalidConfig("ses_noise", "must be >= 0");
  if (unmatched_rate_base < 0.0 || unmatched_rate_base > 1.0)
    throw InvalidConfig("unmatched_rate_base", "must be in [0,1]");
  if (unmatched_rate_span < 0.0 || unmatched_rate_base + unmatched_rate_span > 1.0)
    throw InvalidConfig("unmatched_rate_span", "base + span must stay in [0,1]");
  if (deprivation_dropout < 0.0)
    throw InvalidConfig("deprivation_dropout", "must be >= 0");
  if (static_cast<int>(premium.age_effects.size()) !=
      static_cast<int>(age_band_labels().size()))
    throw InvalidConfig("premium.age_effects", "needs one entry per age band");
  if (static_cast<int>(premium.group_effects.size()) != p)
    throw InvalidConfig("premium.group_effects", "length must match race set");
  if (premium.noise_sd < 0.0) throw InvalidConfig("premium.noise_sd", "must be >= 0");
}

struct SyntheticPopulation {
  CategorySet races;
  std::vector<PopulationRecord> records;
  std::vector<RegionProfile> regions;
  ProxyTables tables;
};

namespace detail {

constexpr std::uint64_t kRegionSalt = 0x7265670000000000ULL;
constexpr std::uint64_t kPremiumSalt = 0x7072656d00000000ULL;

inline std::string region_key(int index, int region_count) {
  int width = 1;
  for (int v = region_count - 1; v >= 10; v /= 10) ++width;
  width = std::max(width, 3);
  std::string digits = std::to_string(index);
  return "R" + std::string(width - digits.size(), '0') + digits;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double clamp(double x, double lo, double hi) {
  return x < lo ? lo : (x > hi ? hi : x);
}

// P(key | r) under the pool model: with probability `sharpness` a name is
// drawn uniformly from the race's own pool, otherwise uniformly from the
// union of all pools.
inline double name_likelihood(bool own_pool, int own_pool_size, int total_keys,
                              double sharpness) {
  double l = (1.0 - sharpness) / static_cast<double>(total_keys);
  if (own_pool) l += sharpness / static_cast<double>(own_pool_size);
  return l;
}

}  // namespace detail

// Emits name tables that match the generating distributions exactly, so that
// proxy error is governed by the sharpness dial and nothing else.
inline void build_name_tables(const ScenarioConfig& cfg, SurnameTable& surnames,
                              FirstNameTable& firstnames) {
  const int p = cfg.races.size();
  const int s_total = p * cfg.surnames_per_race;
  const int f_total = p * cfg.firstnames_per_race;
  surnames.categories = p;
  firstnames.categories = p;

  for (int home = 0; home < p; ++home) {
    for (int i = 0; i < cfg.surnames_per_race; ++i) {
      Vector unnorm(p);
      for (int r = 0; r < p; ++r)
        unnorm[r] = cfg.statewide_shares[r] *
                    detail::name_likelihood(r == home, cfg.surnames_per_race,
                                            s_total, cfg.name_sharpness);
      const double denom = stable_sum(unnorm);
      for (int r = 0; r < p; ++r) unnorm[r] /= denom;
      surnames.insert("sur" + std::to_string(home) + "_" + std::to_string(i),
                      std::move(unnorm));
    }
    for (int i = 0; i < cfg.firstnames_per_race; ++i) {
      Vector lik(p);
      for (int r = 0; r < p; ++r)
        lik[r] = detail::name_likelihood(r == home, cfg.firstnames_per_race,
                                         f_total, cfg.name_sharpness);
      firstnames.insert("fn" + std::to_string(home) + "_" + std::to_string(i),
                        std::move(lik));
    }
  }
}

inline std::vector<RegionProfile> build_regions(const ScenarioConfig& cfg,
                                                const Rng& root) {
  const int p = cfg.races.size();
  int majority = 0;
  for (int r = 1; r < p; ++r)
    if (cfg.statewide_shares[r] > cfg.statewide_shares[majority]) majority = r;

  std::vector<RegionProfile> regions(cfg.region_count);
  for (int i = 0; i < cfg.region_count; ++i) {
    Rng rng = root.derive(detail::kRegionSalt + static_cast<std::uint64_t>(i));
    RegionProfile& reg = regions[i];
    reg.key = detail::region_key(i, cfg.region_count);
    reg.population = std::max(
        1, static_cast<int>(std::lround(
               cfg.mean_region_population *
               (1.0 + cfg.population_jitter * (2.0 * rng.uniform() - 1.0)))));
    reg.lean_race = rng.categorical(cfg.statewide_shares);
    reg.lean = rng.uniform(0.0, cfg.homogeneity);
    reg.shares.resize(p);
    for (int r = 0; r < p; ++r)
      reg.shares[r] = (1.0 - reg.lean) * cfg.statewide_shares[r] +
                      (r == reg.lean_race ? reg.lean : 0.0);

    const double sign = reg.lean_race == majority ? 1.0 : -1.0;
    reg.affluence = cfg.ses_confounding * reg.lean * sign +
                    cfg.ses_noise * rng.normal();
    reg.ses.medfaminc = 62000.0 * (1.0 + 0.55 * reg.affluence);
    reg.ses.ppov = detail::clamp(0.14 * (1.0 - 0.75 * reg.affluence) +
                                     0.015 * rng.normal(),
                                 0.005, 0.95);
    reg.ses.punemp = detail::clamp(0.075 * (1.0 - 0.55 * reg.affluence) +
                                       0.010 * rng.normal(),
                                   0.003, 0.90);

    reg.latent_risk = rng.normal();
    reg.premium_effect = -cfg.premium.ses_effect * reg.affluence +
                         cfg.premium.latent_risk_effect * reg.latent_risk;
    // Name-table coverage degrades in racially homogeneous regions at either
    // end of the SES spectrum, plus an unmeasured region factor. The lean^2
    // gate concentrates both channels in regions homogeneous enough that the
    // leaned race is also the regional posterior argmax.
    const double gate = reg.lean * reg.lean;
    const double dropout = detail::clamp(
        cfg.unmatched_rate_base +
            gate * (cfg.unmatched_rate_span * detail::sigmoid(reg.latent_risk) +
                    cfg.deprivation_dropout * std::abs(reg.affluence)),
        0.0, 0.95);
    reg.unmatched_rate = dropout;
    reg.first_unmatched_rate = 0.5 * dropout;
  }
  return regions;
}

// Premiums are rating-cell quantities: base + age band + gender + region
// effect, plus the planted per-race effect when the direct switch is on.
inline void assign_premiums(std::vector<PopulationRecord>& records,
                            const std::vector<RegionProfile>& regions,
                            const ScenarioConfig& cfg) {
  const Rng root = Rng(cfg.seed).derive(detail::kPremiumSalt);
  for (PopulationRecord& rec : records) {
    const RegionProfile& reg = regions.at(rec.region_index);
    double premium = cfg.premium.base + cfg.premium.age_effects[rec.age_band] +
                     (rec.gender == 1 ? cfg.premium.gender_effect : 0.0) +
                     reg.premium_effect;
    if (cfg.premium.direct_race_effect)
      premium += cfg.premium.group_effects[rec.true_race];
    if (cfg.premium.noise_sd > 0.0) {
      Rng rng = root.derive(static_cast<std::uint64_t>(rec.id));
      premium += cfg.premium.noise_sd * rng.normal();
    }
    rec.premium = premium;
  }
}

inline SyntheticPopulation generate_population(const ScenarioConfig& cfg) {
  cfg.validate();
  const int p = cfg.races.size();
  const Rng root(cfg.seed);

  SyntheticPopulation pop;
  pop.races = cfg.races;
  build_name_tables(cfg, pop.tables.surnames, pop.tables.firstnames);
  pop.regions = build_regions(cfg, root);

  std::int64_t total = 0;
  for (const auto& reg : pop.regions) total += reg.population;
  pop.records.reserve(total);

  const int s_total = p * cfg.surnames_per_race;
  const int f_total = p * cfg.firstnames_per_race;
  pop.tables.geo.categories = p;
  pop.tables.geo.race_totals.assign(p, 0.0);

  std::int64_t id = 0;
  const int n_bands = static_cast<int>(age_band_labels().size());
  for (int i = 0; i < static_cast<int>(pop.regions.size()); ++i) {
    const RegionProfile& reg = pop.regions[i];
    // continue the region's stream past the draws consumed by build_regions
    Rng rng = root.derive(detail::kRegionSalt + static_cast<std::uint64_t>(i))
                  .derive(1);
    Vector tally(p, 0.0);
    for (int m = 0; m < reg.population; ++m) {
      PopulationRecord rec;
      rec.id = id++;
      rec.region_key = reg.key;
      rec.region_index = i;
      rec.true_race = rng.categorical(reg.shares);
      tally[rec.true_race] += 1.0;

      const double miss = rng.uniform();
      if (miss < reg.unmatched_rate) {
        rec.surname_key = "u" + std::to_string(rec.id) + "s";
        rec.first_key = "u" + std::to_string(rec.id) + "f";
      } else {
        if (rng.uniform() < cfg.name_sharpness) {
          rec.surname_key =
              "sur" + std::to_string(rec.true_race) + "_" +
              std::to_string(rng.uniform_index(cfg.surnames_per_race));
        } else {
          const int g = static_cast<int>(rng.uniform_index(s_total));
          rec.surname_key = "sur" + std::to_string(g / cfg.surnames_per_race) +
                            "_" + std::to_string(g % cfg.surnames_per_race);
        }
        if (miss < reg.unmatched_rate + reg.first_unmatched_rate) {
          rec.first_key = "u" + std::to_string(rec.id) + "f";
        } else if (rng.uniform() < cfg.name_sharpness) {
          rec.first_key =
              "fn" + std::to_string(rec.true_race) + "_" +
              std::to_string(rng.uniform_index(cfg.firstnames_per_race));
        } else {
          const int g = static_cast<int>(rng.uniform_index(f_total));
          rec.first_key = "fn" + std::to_string(g / cfg.firstnames_per_race) +
                          "_" + std::to_string(g % cfg.firstnames_per_race);
        }
      }

      rec.age_band = static_cast<int>(rng.uniform_index(n_bands));
      rec.gender = rng.bernoulli(0.5) ? 1 : 0;
      rec.ses = reg.ses;
      pop.records.push_back(std::move(rec));
    }
    pop.tables.geo.insert(reg.key, tally);
  }

  assign_premiums(pop.records, pop.regions, cfg);
  return pop;
}

}  // namespace proxyaudit
