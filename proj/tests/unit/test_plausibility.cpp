#include <gtest/gtest.h>

#include <random>

#include "stresslab/error.hpp"
#include "stresslab/plausibility.hpp"
#include "support.hpp"

using namespace stresslab;
using namespace stresslab::plausibility;

namespace {

Scenario exemplar() { return *validate_scenario(testsupport::canada_exemplar()).scenario; }

}  // namespace

TEST(DeriveShock, RateLevelMinusBaseline) {
  auto s = derive_shock(exemplar(), testsupport::canada_baseline(), {true, false});
  EXPECT_NEAR(s.interest_rate, 1.50, 1e-12);
  EXPECT_EQ(s.gdp_growth, -0.8);
  EXPECT_EQ(s.inflation, 1.6);
}

TEST(DeriveShock, PassThroughAndLevels) {
  Scenario sc = exemplar();
  sc.shock.interest_rate = 1.0;
  EXPECT_EQ(derive_shock(sc, testsupport::canada_baseline(), {false, false}).interest_rate, 1.0);
  auto lv = derive_shock(exemplar(), testsupport::canada_baseline(), {true, true});
  EXPECT_NEAR(lv.gdp_growth, -0.8 - 1.4, 1e-12);
  EXPECT_NEAR(lv.inflation, 1.6 - 2.0, 1e-12);
}

TEST(DeriveShock, CountryMismatch) {
  Scenario sc = exemplar();
  sc.country = "Japan";
  EXPECT_THROW(derive_shock(sc, testsupport::canada_baseline(), {}), ConfigError);
}

TEST(HardGate, InflationAboveTwenty) {
  auto r = hard_gate({-1.0, 25.0, 3.0}, "");
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.violations, std::vector<std::string>{"inflation>20"});
}

TEST(HardGate, CanonicalAcceptedShock) {
  EXPECT_TRUE(hard_gate({-1.4, 3.0, 4.0}, "").pass);
}

TEST(HardGate, ContradictionRule) {
  auto r = hard_gate({-3.0, -1.0, 2.0}, "");
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.violations, std::vector<std::string>{"contradiction"});
  EXPECT_TRUE(hard_gate({-3.0, -1.0, 2.0}, "Rates rise to defend the currency.").pass);
  EXPECT_TRUE(hard_gate({-1.9, -1.0, 2.0}, "").pass);
}

TEST(HardGate, EveryRuleAndOrdering) {
  auto r = hard_gate({-12.0, 25.0, 16.0}, "");
  EXPECT_EQ(r.violations, (std::vector<std::string>{"gdp_shock>10", "inflation>20", "rate>15"}));
  EXPECT_EQ(hard_gate({0, 0, -1.5}, "").violations, std::vector<std::string>{"rate<-1"});
  // Pure and idempotent.
  auto again = hard_gate({-12.0, 25.0, 16.0}, "");
  EXPECT_EQ(again.violations, r.violations);
}

TEST(HardGate, LevelsComeFromBaselinePlusShock) {
  ImpliedLevels lv{2.0 + 19.0, 4.25};
  EXPECT_FALSE(hard_gate({0.0, 19.0, 0.0}, "", lv).pass);
}

TEST(SoftScore, ZeroShockWellFormedRationale) {
  std::string rationale;
  for (int i = 0; i < 90; ++i) rationale += "word ";
  auto s = soft_score({0, 0, 0}, rationale, {"a", "b", "c", "d"});
  EXPECT_GE(s.total, 2.5);
  EXPECT_EQ(s.structure, 5.0);
}

TEST(SoftScore, ExemplarNearRecordedScore) {
  auto sc = exemplar();
  auto shock = derive_shock(sc, testsupport::canada_baseline(), {true, false});
  auto s = soft_score(shock, sc.rationale, sc.risk_sectors);
  EXPECT_NEAR(s.total, 3.0, 0.5);
}

TEST(SoftScore, EmptyInputsFloorStructure) {
  auto s = soft_score({-3, 1, 1}, "", {});
  EXPECT_EQ(s.structure, 0.0);
  EXPECT_GE(s.total, 0.0);
  EXPECT_LE(s.total, 5.0);
}

TEST(SoftScore, BoundedOverRandomInputs) {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u(-30, 30);
  for (int i = 0; i < 2000; ++i) {
    auto s = soft_score({u(g), u(g), u(g)}, std::string(g() % 900, 'x'), std::vector<std::string>(g() % 7, "s"));
    ASSERT_GE(s.total, 0.0);
    ASSERT_LE(s.total, 5.0);
    for (double sub : {s.magnitude, s.coherence, s.structure}) {
      ASSERT_GE(sub, 0.0);
      ASSERT_LE(sub, 5.0);
    }
    ASSERT_NEAR(s.total, 0.4 * s.magnitude + 0.4 * s.coherence + 0.2 * s.structure, 1e-12);
  }
}

TEST(Lambda, FloorCapAndHandValue) {
  EXPECT_EQ(build_lambda({0, 0, 0}, 0.0), 0.0);
  EXPECT_EQ(build_lambda({-8, 3, 4}, 1.0), 1.0);
  const double norm = std::sqrt(1.4 * 1.4 + 9.0 + 16.0);
  EXPECT_NEAR(build_lambda({-1.4, 3, 4}, 0.5332708434), 0.5 * norm / 8.0 + 0.5 * 0.5332708434, 1e-12);
  EXPECT_NEAR(build_lambda({-1.4, 3, 4}, 0.533), 0.591, 1e-3);
}

TEST(Lambda, MonotoneInShockNorm) {
  std::mt19937_64 g(12);
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 2000; ++i) {
    MacroShock dir{n(g), n(g), n(g)};
    const double r = u(g);
    const double a = 20 * u(g), b = a + 5 * u(g);
    MacroShock s1{dir.gdp_growth * a, dir.inflation * a, dir.interest_rate * a};
    MacroShock s2{dir.gdp_growth * b, dir.inflation * b, dir.interest_rate * b};
    ASSERT_LE(build_lambda(s1, r), build_lambda(s2, r));
  }
}

TEST(LexicalRegime, PriorAndCrisisText) {
  auto empty = lexical_regime_fallback("");
  EXPECT_EQ(empty.label(), RegimeLabel::normal);
  EXPECT_LT(empty.score, 0.3);
  auto crisis = lexical_regime_fallback("Contagion and crisis lead to collapse; a systemic crisis and panic.");
  EXPECT_EQ(crisis.label(), RegimeLabel::crisis);
  for (auto text : {"", "stress", "calm steady growth", "crisis crisis stress normal"}) {
    auto r = lexical_regime_fallback(text);
    EXPECT_NEAR(r.probs[0] + r.probs[1] + r.probs[2], 1.0, 1e-9);
    EXPECT_NEAR(r.score, 0.5 * r.probs[1] + r.probs[2], 1e-15);
  }
}

TEST(Audit, AcceptedImpliesGateAndThreshold) {
  LexicalRegimeClassifier cls;
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> u(-12, 12);
  auto base = exemplar();
  for (int i = 0; i < 500; ++i) {
    Scenario s = base;
    s.shock = {u(g), u(g), 4.25 + u(g)};
    auto r = audit(s, testsupport::canada_baseline(), cls, {});
    if (r.accepted) {
      ASSERT_TRUE(r.hard_pass);
      ASSERT_GE(r.soft.total, 2.0);
    }
    ASSERT_GE(r.lambda, 0.0);
    ASSERT_LE(r.lambda, 1.0);
  }
}

TEST(Audit, AnnotateFillsFieldsAndHash) {
  LexicalRegimeClassifier cls;
  auto s = exemplar();
  auto r = audit(s, testsupport::canada_baseline(), cls, {});
  EXPECT_TRUE(r.accepted);
  auto a = annotate(s, r);
  EXPECT_EQ(a.plausibility_ok, 1);
  EXPECT_EQ(a.plausibility_score, r.soft.total);
  EXPECT_EQ(a.lambda, r.lambda);
  EXPECT_EQ(a.scenario_hash, compute_scenario_hash(a));
}
