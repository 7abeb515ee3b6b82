#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "proxyaudit/categories.hpp"
#include "proxyaudit/errors.hpp"
#include "proxyaudit/linalg.hpp"

namespace proxyaudit {

enum class ProxyMode { BIFSG, BISG, GEO_ONLY };

inline const char* to_string(ProxyMode m) {
  switch (m) {
    case ProxyMode::BIFSG: return "BIFSG";
    case ProxyMode::BISG: return "BISG";
    case ProxyMode::GEO_ONLY: return "GEO_ONLY";
  }
  return "?";
}

struct ProxyPosterior {
  Vector probs;
  ProxyMode mode = ProxyMode::GEO_ONLY;
  int argmax = 0;
  bool tie_broken = false;
};

// Lowest index wins on ties; this is a reproducibility convention, the
// upstream literature does not specify one.
inline int max_classify(const ProxyPosterior& post) { return post.argmax; }

namespace detail {

inline ProxyPosterior make_posterior(Vector unnormalized, ProxyMode mode) {
  for (double v : unnormalized)
    if (v < 0.0) throw ValidationError("negative probability component");
  const double denom = stable_sum(unnormalized);
  if (denom <= 0.0) throw ZeroEvidence();
  ProxyPosterior post;
  post.mode = mode;
  post.probs.resize(unnormalized.size());
  for (std::size_t r = 0; r < unnormalized.size(); ++r)
    post.probs[r] = unnormalized[r] / denom;
  post.argmax = 0;
  for (std::size_t r = 1; r < post.probs.size(); ++r)
    if (post.probs[r] > post.probs[post.argmax]) post.argmax = static_cast<int>(r);
  post.tie_broken = false;
  for (std::size_t r = 0; r < post.probs.size(); ++r)
    if (static_cast<int>(r) != post.argmax &&
        post.probs[r] == post.probs[post.argmax])
      post.tie_broken = true;
  return post;
}

}  // namespace detail

// P(r | s, g) from the surname posterior P(r|s) and geography likelihood
// P(g|r), via Bayes' rule.
inline ProxyPosterior bisg_posterior(const Vector& surname_probs,
                                     const Vector& geo_given_race) {
  if (surname_probs.size() != geo_given_race.size())
    throw LengthMismatch(surname_probs.size(), geo_given_race.size());
  Vector prod(surname_probs.size());
  for (std::size_t r = 0; r < prod.size(); ++r)
    prod[r] = surname_probs[r] * geo_given_race[r];
  return detail::make_posterior(std::move(prod), ProxyMode::BISG);
}

// P(r | s, f, g): BISG extended with the first-name likelihood P(f|r).
inline ProxyPosterior bifsg_posterior(const Vector& surname_probs,
                                      const Vector& firstname_likelihood,
                                      const Vector& geo_given_race) {
  if (surname_probs.size() != firstname_likelihood.size())
    throw LengthMismatch(surname_probs.size(), firstname_likelihood.size());
  if (surname_probs.size() != geo_given_race.size())
    throw LengthMismatch(surname_probs.size(), geo_given_race.size());
  Vector prod(surname_probs.size());
  for (std::size_t r = 0; r < prod.size(); ++r)
    prod[r] = surname_probs[r] * firstname_likelihood[r] * geo_given_race[r];
  return detail::make_posterior(std::move(prod), ProxyMode::BIFSG);
}

// Surname -> P(r|s) posterior rows.
struct SurnameTable {
  std::unordered_map<std::string, Vector> rows;
  int categories = 0;

  void insert(const std::string& key, Vector probs) {
    validate_row(probs);
    rows[key] = std::move(probs);
  }

  const Vector* lookup(const std::string& key) const {
    auto it = rows.find(key);
    return it == rows.end() ? nullptr : &it->second;
  }

  void validate_row(const Vector& probs) const {
    if (categories && static_cast<int>(probs.size()) != categories)
      throw DimensionMismatch("surname row length mismatch");
    double sum = 0.0;
    for (double v : probs) {
      if (v < 0.0) throw ValidationError("surname probability negative");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw ValidationError("surname probabilities sum to " + std::to_string(sum));
  }
};

// First name -> per-race likelihood P(f|r). Rows have no sum constraint.
struct FirstNameTable {
  std::unordered_map<std::string, Vector> rows;
  int categories = 0;

  void insert(const std::string& key, Vector likelihood) {
    if (categories && static_cast<int>(likelihood.size()) != categories)
      throw DimensionMismatch("first-name row length mismatch");
    for (double v : likelihood)
      if (v < 0.0) throw ValidationError("first-name likelihood negative");
    rows[key] = std::move(likelihood);
  }

  const Vector* lookup(const std::string& key) const {
    auto it = rows.find(key);
    return it == rows.end() ? nullptr : &it->second;
  }
};

// Region -> per-race population counts; derives P(g|r) for the Bayes updates
// and P(r|g) for the geography-only fallback.
struct GeoTable {
  std::unordered_map<std::string, Vector> counts;
  Vector race_totals;  // sum over regions per race
  int categories = 0;

  void insert(const std::string& region, Vector region_counts) {
    if (categories == 0) {
      categories = static_cast<int>(region_counts.size());
      race_totals.assign(categories, 0.0);
    }
    if (static_cast<int>(region_counts.size()) != categories)
      throw DimensionMismatch("geo row length mismatch");
    for (double v : region_counts)
      if (v < 0.0) throw ValidationError("geo count negative");
    auto [it, fresh] = counts.emplace(region, region_counts);
    if (!fresh) throw ValidationError("duplicate region key: " + region);
    for (int r = 0; r < categories; ++r) race_totals[r] += region_counts[r];
  }

  bool has_region(const std::string& region) const {
    return counts.count(region) > 0;
  }

  // P(g|r) = n_{g,r} / sum_g n_{g,r}
  Vector geo_given_race(const std::string& region) const {
    auto it = counts.find(region);
    if (it == counts.end()) throw UnknownRegion(region);
    Vector out(categories);
    for (int r = 0; r < categories; ++r) {
      if (race_totals[r] <= 0.0)
        throw ValidationError("race " + std::to_string(r) +
                              " has zero total population in geo table");
      out[r] = it->second[r] / race_totals[r];
    }
    return out;
  }

  // P(r|g): the region's racial composition
  Vector race_given_geo(const std::string& region) const {
    auto it = counts.find(region);
    if (it == counts.end()) throw UnknownRegion(region);
    const double total = stable_sum(it->second);
    if (total <= 0.0)
      throw ValidationError("region " + region + " has zero population");
    Vector out(categories);
    for (int r = 0; r < categories; ++r) out[r] = it->second[r] / total;
    return out;
  }
};

struct ProxyTables {
  SurnameTable surnames;
  FirstNameTable firstnames;
  GeoTable geo;
};

struct FallbackPolicy {
  bool allow_bisg = true;      // surname-only fallback when the first name misses
  bool allow_geo_only = true;  // P(r|g) fallback when both names miss
};

struct NameKeys {
  std::string surname_key;
  std::string first_key;
  std::string region_key;
};

// Full-information BIFSG when both names resolve, BISG when only the surname
// does, and the regional composition P(r|g) when neither does. Zero-evidence
// posteriors fall through the same ladder.
inline ProxyPosterior infer_individual(const NameKeys& keys, const ProxyTables& tables,
                                       const FallbackPolicy& policy = {}) {
  if (!tables.geo.has_region(keys.region_key)) throw UnknownRegion(keys.region_key);
  const Vector geo = tables.geo.geo_given_race(keys.region_key);
  const Vector* sur = tables.surnames.lookup(keys.surname_key);
  const Vector* fst = tables.firstnames.lookup(keys.first_key);

  if (sur && fst) {
    try {
      return bifsg_posterior(*sur, *fst, geo);
    } catch (const ZeroEvidence&) {
      if (!policy.allow_bisg) throw;
    }
  }
  if (sur && policy.allow_bisg) {
    try {
      return bisg_posterior(*sur, geo);
    } catch (const ZeroEvidence&) {
      if (!policy.allow_geo_only) throw;
    }
  }
  if (!policy.allow_geo_only)
    throw ValidationError("geography fallback disabled and names unresolved");
  ProxyPosterior post = detail::make_posterior(
      tables.geo.race_given_geo(keys.region_key), ProxyMode::GEO_ONLY);
  return post;
}

}  // namespace proxyaudit
