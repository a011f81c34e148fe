#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>

#include "stresslab/core.hpp"
#include "stresslab/error.hpp"
#include "support.hpp"

using namespace stresslab;
using testsupport::canada_exemplar;

namespace {

Scenario sample_scenario() {
  auto r = validate_scenario(canada_exemplar());
  EXPECT_TRUE(r.ok());
  return with_hash(*r.scenario);
}

}  // namespace

TEST(CanonicalDump, SortsKeysAndUsesFullPrecision) {
  Json j = Json::parse(R"({"b":1,"a":{"z":0.1,"y":[true,null,"s"]}})");
  EXPECT_EQ(canonical_dump(j), R"({"a":{"y":[true,null,"s"],"z":0.10000000000000001},"b":1})");
}

TEST(CanonicalDump, RejectsNonFinite) {
  Json j{{"x", std::numeric_limits<double>::quiet_NaN()}};
  EXPECT_THROW(canonical_dump(j), SerializationError);
  Scenario s = sample_scenario();
  s.shock.inflation = std::numeric_limits<double>::infinity();
  EXPECT_THROW(canonical_serialize(s), SerializationError);
}

TEST(CanonicalSerialize, IndependentOfFieldAssignmentOrder) {
  Json a = canada_exemplar();
  Json b;
  for (auto it = a.rbegin(); it != a.rend(); ++it) b[it.key()] = it.value();
  auto sa = validate_scenario(a), sb = validate_scenario(b);
  ASSERT_TRUE(sa.ok() && sb.ok());
  EXPECT_EQ(canonical_serialize(*sa.scenario), canonical_serialize(*sb.scenario));
}

TEST(CanonicalSerialize, RationaleChangesDigest) {
  Scenario a = sample_scenario();
  Scenario b = a;
  b.rationale += " ";
  EXPECT_NE(compute_scenario_hash(a), compute_scenario_hash(b));
}

TEST(CanonicalSerialize, HashExcludesItself) {
  Scenario a = sample_scenario();
  Scenario b = a;
  b.scenario_hash = "something else";
  EXPECT_EQ(canonical_serialize(a), canonical_serialize(b));
  EXPECT_EQ(a.scenario_hash.size(), 64u);
}

// Every field mutation must reach the canonical bytes.
TEST(CanonicalSerialize, InjectiveUnderSingleFieldMutation) {
  const Scenario base = sample_scenario();
  const std::string ref = canonical_serialize(base);
  std::vector<std::function<void(Scenario&)>> mutations{
      [](Scenario& s) { s.country = "Japan"; },
      [](Scenario& s) { s.title += "!"; },
      [](Scenario& s) { s.shock.gdp_growth = std::nextafter(s.shock.gdp_growth, 0.0); },
      [](Scenario& s) { s.shock.inflation += 1e-12; },
      [](Scenario& s) { s.shock.interest_rate -= 1e-12; },
      [](Scenario& s) { s.rationale = "x"; },
      [](Scenario& s) { s.risk_sectors.pop_back(); },
      [](Scenario& s) { s.rag = !s.rag; },
      [](Scenario& s) { s.use_news = !s.use_news; },
      [](Scenario& s) { s.model = "m"; },
      [](Scenario& s) { s.model_version = "v"; },
      [](Scenario& s) { s.provider = "p"; },
      [](Scenario& s) { s.prompt_variant = "v01_other"; },
      [](Scenario& s) { s.prompt_hash = "00"; },
      [](Scenario& s) { s.ctx_hash = "11"; },
      [](Scenario& s) { s.seed += 1; },
      [](Scenario& s) { s.timestamp_utc += 1; },
      [](Scenario& s) { s.plausibility_ok = 0; },
      [](Scenario& s) { s.plausibility_score = 2.5; },
      [](Scenario& s) { s.regime_label = RegimeLabel::crisis; },
      [](Scenario& s) { s.regime_score = 0.1; },
      [](Scenario& s) { s.regime_probs[0] += 1e-15; },
      [](Scenario& s) { s.lambda = 0.25; },
  };
  for (std::size_t i = 0; i < mutations.size(); ++i) {
    Scenario m = base;
    mutations[i](m);
    EXPECT_NE(canonical_serialize(m), ref) << "mutation " << i;
  }
}

TEST(ValidateScenario, ExemplarIsAccepted) {
  auto r = validate_scenario(canada_exemplar());
  ASSERT_TRUE(r.ok());
  const Scenario& s = *r.scenario;
  EXPECT_EQ(s.shock.gdp_growth, -0.8);
  EXPECT_EQ(s.shock.inflation, 1.6);
  EXPECT_EQ(s.shock.interest_rate, 5.75);
  EXPECT_EQ(s.regime_label, RegimeLabel::stress);
  EXPECT_NEAR(s.regime_probs[0] + s.regime_probs[1] + s.regime_probs[2], 1.0, 1e-9);
  EXPECT_EQ(s.timestamp_utc, 1763141778000);
  EXPECT_EQ(s.risk_sectors.size(), 5u);
}

TEST(ValidateScenario, MissingSectorsIsSingleViolation) {
  Json j = canada_exemplar();
  j.erase("risk_sectors");
  auto r = validate_scenario(j);
  ASSERT_FALSE(r.ok());
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0].field, "risk_sectors");
  EXPECT_EQ(r.violations[0].kind, Violation::Kind::missing);
}

TEST(ValidateScenario, StringNumberIsTypeViolation) {
  Json j = canada_exemplar();
  j["inflation"] = "3%";
  auto r = validate_scenario(j);
  ASSERT_FALSE(r.ok());
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0].field, "inflation");
  EXPECT_EQ(r.violations[0].kind, Violation::Kind::wrong_type);
}

TEST(ValidateScenario, ReportsEveryDefect) {
  Json j = canada_exemplar();
  j.erase("country");
  j["plausibility_score"] = 7.0;
  j["regime_label_text"] = "crisis";  // not the argmax
  auto r = validate_scenario(j);
  ASSERT_EQ(r.violations.size(), 3u);
  EXPECT_EQ(r.violations[0].kind, Violation::Kind::missing);
  EXPECT_EQ(r.violations[1].kind, Violation::Kind::out_of_range);
  EXPECT_EQ(r.violations[2].kind, Violation::Kind::inconsistent);
}

TEST(ValidateScenario, AcceptsUnsuffixedRegimeNames) {
  Json j = canada_exemplar();
  j["regime_label"] = j["regime_label_text"];
  j["regime_score"] = j["regime_score_text"];
  j.erase("regime_label_text");
  j.erase("regime_score_text");
  auto r = validate_scenario(j);
  ASSERT_TRUE(r.ok());
  EXPECT_DOUBLE_EQ(r.scenario->regime_score, 0.5332708434);
  // Output always uses the suffixed spelling.
  Json out = to_json(*r.scenario);
  EXPECT_TRUE(out.contains("regime_label_text"));
  EXPECT_FALSE(out.contains("regime_label"));
}

TEST(ValidateScenario, NonObjectRejected) {
  EXPECT_FALSE(validate_scenario(Json::array()).ok());
}

TEST(ValidateScenario, RoundTripsThroughCanonicalForm) {
  Scenario s = sample_scenario();
  s.regime_probs = {0.25, 0.5, 0.25};
  s.lambda = 0.4;
  s = with_hash(s);
  auto back = validate_scenario(Json::parse(canonical_dump(to_json(s))));
  ASSERT_TRUE(back.ok());
  EXPECT_EQ(*back.scenario, s);
}

TEST(RunConfig, DefaultsAreValidAndRoundTrip) {
  RunConfig cfg = default_config();
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.prompt_variants.size(), 30u);
  EXPECT_EQ(cfg.countries.size(), 7u);
  EXPECT_EQ(config_from_json(to_json(cfg)), cfg);
}

TEST(RunConfig, RejectsBrokenInvariants) {
  RunConfig cfg = default_config();
  cfg.horizon_days = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = default_config();
  cfg.prompt_variants.push_back(cfg.prompt_variants.front());
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = default_config();
  cfg.prompt_variants.clear();
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(config_from_json(Json{{"n_paths", "many"}}), ConfigError);
}

TEST(ChannelParams, DefaultsAndBounds) {
  ChannelParams p;
  EXPECT_EQ(p.vol_kappa, 0.25);
  EXPECT_EQ(p.drift_decay, 0.97);
  EXPECT_NO_THROW(p.validate());
  p.drift_decay = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = ChannelParams{};
  p.return_clip = 1.5;
  EXPECT_THROW(p.validate(), ConfigError);
  p = ChannelParams{};
  p.amp_news = -0.1;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(RunConfig, LoadMissingFileThrows) {
  EXPECT_THROW(load_config("/nonexistent/config.json"), Error);
}
