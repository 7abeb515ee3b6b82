#include <gtest/gtest.h>

#include <cmath>

#include "proxyaudit/proxy.hpp"
#include "proxyaudit/rng.hpp"

namespace pa = proxyaudit;

namespace {

// Oracle for the Bayes updates: normalize the elementwise product directly.
pa::Vector normalized_product_oracle(const std::vector<pa::Vector>& factors) {
  pa::Vector prod(factors.front().size(), 1.0);
  for (const auto& f : factors)
    for (std::size_t i = 0; i < prod.size(); ++i) prod[i] *= f[i];
  double sum = 0.0;
  for (double v : prod) sum += v;
  for (double& v : prod) v /= sum;
  return prod;
}

pa::ProxyTables toy_tables() {
  pa::ProxyTables t;
  t.surnames.categories = 2;
  t.surnames.insert("garcia", {0.2, 0.8});
  t.surnames.insert("smith", {0.9, 0.1});
  t.firstnames.categories = 2;
  t.firstnames.insert("maria", {0.1, 0.6});
  t.firstnames.insert("john", {0.5, 0.2});
  t.geo.insert("r1", {700.0, 300.0});
  t.geo.insert("r2", {100.0, 900.0});
  return t;
}

}  // namespace

TEST(Bisg, DegenerateSurnameForcesPosterior) {
  const auto post = pa::bisg_posterior({1.0, 0.0}, {0.2, 0.4});
  EXPECT_DOUBLE_EQ(post.probs[0], 1.0);
  EXPECT_DOUBLE_EQ(post.probs[1], 0.0);
  EXPECT_EQ(post.mode, pa::ProxyMode::BISG);
}

TEST(Bisg, SymmetricInputsGiveUniform) {
  const auto post = pa::bisg_posterior({0.5, 0.5}, {0.3, 0.3});
  EXPECT_DOUBLE_EQ(post.probs[0], 0.5);
  EXPECT_DOUBLE_EQ(post.probs[1], 0.5);
}

TEST(Bisg, HandBayesExample) {
  const pa::Vector surname = {0.8, 0.2};
  const pa::Vector geo = {0.1, 0.3};
  const auto post = pa::bisg_posterior(surname, geo);
  const auto oracle = normalized_product_oracle({surname, geo});
  EXPECT_NEAR(post.probs[0], oracle[0], 1e-15);
  EXPECT_NEAR(post.probs[1], oracle[1], 1e-15);
  EXPECT_NEAR(post.probs[0], 0.08 / 0.14, 1e-12);
  EXPECT_NEAR(post.probs[1], 0.06 / 0.14, 1e-12);
  EXPECT_EQ(pa::max_classify(post), 0);
}

TEST(Bisg, ZeroEvidenceThrows) {
  EXPECT_THROW(pa::bisg_posterior({1.0, 0.0}, {0.0, 0.5}), pa::ZeroEvidence);
}

TEST(Bifsg, UniformFirstNameReducesToBisg) {
  const pa::Vector surname = {0.6, 0.4};
  const pa::Vector geo = {0.25, 0.05};
  const pa::Vector uniform_first = {0.37, 0.37};
  const auto bisg = pa::bisg_posterior(surname, geo);
  const auto bifsg = pa::bifsg_posterior(surname, uniform_first, geo);
  for (int r = 0; r < 2; ++r) EXPECT_NEAR(bifsg.probs[r], bisg.probs[r], 1e-12);
  EXPECT_EQ(bifsg.mode, pa::ProxyMode::BIFSG);
}

TEST(Bifsg, HandSubstitutionExample) {
  const pa::Vector surname = {0.5, 0.5};
  const pa::Vector first = {0.9, 0.1};
  const pa::Vector geo = {0.5, 0.5};
  const auto post = pa::bifsg_posterior(surname, first, geo);
  const auto oracle = normalized_product_oracle({surname, first, geo});
  EXPECT_NEAR(post.probs[0], oracle[0], 1e-15);
  EXPECT_NEAR(post.probs[0], 0.9, 1e-12);
  EXPECT_NEAR(post.probs[1], 0.1, 1e-12);
}

TEST(Bifsg, EmptySupportThrows) {
  EXPECT_THROW(pa::bifsg_posterior({0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}),
               pa::ZeroEvidence);
}

TEST(Posterior, SumsToOneAndPermutationEquivariant) {
  pa::Rng rng(77);
  for (int rep = 0; rep < 200; ++rep) {
    const int p = 2 + static_cast<int>(rng.uniform_index(5));
    pa::Vector s(p), f(p), g(p);
    for (int r = 0; r < p; ++r) {
      s[r] = rng.uniform();
      f[r] = rng.uniform();
      g[r] = rng.uniform();
    }
    const auto post = pa::bifsg_posterior(s, f, g);
    double sum = 0.0;
    for (double v : post.probs) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-9);

    // rotate categories by one and compare bit-exactly
    auto rotate = [](pa::Vector v) {
      pa::Vector out(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) out[(i + 1) % v.size()] = v[i];
      return out;
    };
    const auto rotated = pa::bifsg_posterior(rotate(s), rotate(f), rotate(g));
    for (int r = 0; r < p; ++r)
      EXPECT_EQ(rotated.probs[(r + 1) % p], post.probs[r]);
  }
}

TEST(Posterior, GeoScaleInvariance) {
  pa::Rng rng(78);
  for (int rep = 0; rep < 100; ++rep) {
    const int p = 2 + static_cast<int>(rng.uniform_index(4));
    pa::Vector s(p), g(p);
    for (int r = 0; r < p; ++r) {
      s[r] = rng.uniform();
      g[r] = rng.uniform();
    }
    const double scale = std::exp(rng.uniform(-3.0, 3.0));
    pa::Vector g2 = g;
    for (double& v : g2) v *= scale;
    const auto a = pa::bisg_posterior(s, g);
    const auto b = pa::bisg_posterior(s, g2);
    for (int r = 0; r < p; ++r) EXPECT_NEAR(a.probs[r], b.probs[r], 1e-12);
  }
}

TEST(MaxClassify, ArgmaxAndTieRule) {
  pa::ProxyPosterior post;
  post = pa::bisg_posterior({0.1, 0.7, 0.2}, {1.0, 1.0, 1.0});
  EXPECT_EQ(pa::max_classify(post), 1);
  EXPECT_FALSE(post.tie_broken);

  post = pa::bisg_posterior({0.5, 0.5}, {1.0, 1.0});
  EXPECT_EQ(pa::max_classify(post), 0);  // lowest index wins
  EXPECT_TRUE(post.tie_broken);
}

TEST(MaxClassify, Deterministic) {
  for (int rep = 0; rep < 50; ++rep) {
    const auto post = pa::bisg_posterior({0.8, 0.2}, {0.1, 0.3});
    EXPECT_EQ(pa::max_classify(post), 0);
  }
}

TEST(Infer, FallbackLadder) {
  const pa::ProxyTables tables = toy_tables();

  // both names resolve: BIFSG, equal to composing the resolved vectors
  auto post = pa::infer_individual({"garcia", "maria", "r1"}, tables);
  EXPECT_EQ(post.mode, pa::ProxyMode::BIFSG);
  const auto direct = pa::bifsg_posterior(*tables.surnames.lookup("garcia"),
                                          *tables.firstnames.lookup("maria"),
                                          tables.geo.geo_given_race("r1"));
  for (int r = 0; r < 2; ++r) EXPECT_DOUBLE_EQ(post.probs[r], direct.probs[r]);

  // unmatched first name, matched surname: BISG
  post = pa::infer_individual({"garcia", "nosuchname", "r1"}, tables);
  EXPECT_EQ(post.mode, pa::ProxyMode::BISG);

  // both unmatched: regional composition passthrough
  post = pa::infer_individual({"x", "y", "r1"}, tables);
  EXPECT_EQ(post.mode, pa::ProxyMode::GEO_ONLY);
  EXPECT_NEAR(post.probs[0], 0.7, 1e-12);
  EXPECT_NEAR(post.probs[1], 0.3, 1e-12);
}

TEST(Infer, UnknownRegionThrows) {
  const pa::ProxyTables tables = toy_tables();
  EXPECT_THROW(pa::infer_individual({"garcia", "maria", "nowhere"}, tables),
               pa::UnknownRegion);
}

TEST(Infer, PolicyCanDisableFallbacks) {
  const pa::ProxyTables tables = toy_tables();
  pa::FallbackPolicy strict;
  strict.allow_geo_only = false;
  EXPECT_THROW(pa::infer_individual({"x", "y", "r1"}, tables, strict),
               pa::ValidationError);
}

TEST(GeoTable, DerivedConditionals) {
  const pa::ProxyTables tables = toy_tables();
  // P(g|r): region r1 holds 700 of 800 class-0 members
  const auto ggr = tables.geo.geo_given_race("r1");
  EXPECT_NEAR(ggr[0], 700.0 / 800.0, 1e-12);
  EXPECT_NEAR(ggr[1], 300.0 / 1200.0, 1e-12);
  const auto rgg = tables.geo.race_given_geo("r2");
  EXPECT_NEAR(rgg[0], 0.1, 1e-12);
  EXPECT_NEAR(rgg[1], 0.9, 1e-12);
}
