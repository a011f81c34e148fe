#include "stresslab/plausibility.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "stresslab/error.hpp"
#include "stresslab/retrieval.hpp"

namespace stresslab::plausibility {

RegimeLabel RegimeResult::label() const {
  return static_cast<RegimeLabel>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

namespace {

// Stems, matched as token prefixes.
const std::vector<std::string>& normal_lexicon() {
  static const std::vector<std::string> k{"stable", "steady", "resilien", "moderat", "gradual", "normal",
                                          "recover", "orderly", "balanced", "benign", "soft", "contained"};
  return k;
}
const std::vector<std::string>& stress_lexicon() {
  static const std::vector<std::string> k{"stress",  "slowdown", "tighten", "tighter",  "squeeze", "strain",
                                          "pressur", "weak",     "declin",  "downturn", "recession", "volatil",
                                          "spread",  "uncertain", "contract", "shock",  "fall",    "slump"};
  return k;
}
const std::vector<std::string>& crisis_lexicon() {
  static const std::vector<std::string> k{"crisis", "crises",    "collapse", "contagion", "panic",   "default",
                                          "insolven", "meltdown", "crash",   "bankrupt",  "depression", "freeze",
                                          "systemic", "catastroph", "plunge", "run"};
  return k;
}

int count_hits(const std::vector<std::string>& tokens, const std::vector<std::string>& lexicon) {
  int hits = 0;
  for (const auto& t : tokens) {
    for (const auto& stem : lexicon) {
      bool match = stem == "run" ? t == "run" || t == "runs" : t.rfind(stem, 0) == 0;
      if (match) {
        ++hits;
        break;
      }
    }
  }
  return hits;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::size_t word_count(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

}  // namespace

RegimeResult lexical_regime_fallback(std::string_view rationale) {
  const auto tokens = retrieval::tokenize(std::string(rationale));
  const std::array<double, 3> prior{1.0, 0.5, 0.25};
  std::array<double, 3> w{prior[0] + count_hits(tokens, normal_lexicon()),
                          prior[1] + count_hits(tokens, stress_lexicon()),
                          prior[2] + count_hits(tokens, crisis_lexicon())};
  const double total = w[0] + w[1] + w[2];
  RegimeResult r;
  for (int i = 0; i < 3; ++i) r.probs[i] = w[i] / total;
  r.score = std::clamp(0.5 * r.probs[1] + r.probs[2], 0.0, 1.0);
  return r;
}

MacroShock derive_shock(const Scenario& s, const ingest::CountryBaseline& b, ShockConvention conv) {
  if (s.country != b.country) {
    throw ConfigError("baseline country '" + b.country + "' does not match scenario country '" + s.country + "'");
  }
  MacroShock out = s.shock;
  if (conv.growth_inflation_are_levels) {
    out.gdp_growth = s.shock.gdp_growth - b.gdp_growth;
    out.inflation = s.shock.inflation - b.inflation;
  }
  if (conv.rates_are_levels) out.interest_rate = s.shock.interest_rate - b.interest_rate;
  return out;
}

ImpliedLevels implied_levels(const Scenario& s, const ingest::CountryBaseline& b, ShockConvention conv) {
  ImpliedLevels lv;
  lv.inflation = conv.growth_inflation_are_levels ? s.shock.inflation : b.inflation + s.shock.inflation;
  lv.interest_rate = conv.rates_are_levels ? s.shock.interest_rate : b.interest_rate + s.shock.interest_rate;
  return lv;
}

const std::vector<std::string>& contradiction_override_keywords() {
  static const std::vector<std::string> k{"currency defence", "defend the currency", "credibility", "anchoring",
                                          "imported"};
  return k;
}

HardGateResult hard_gate(const MacroShock& shock, std::string_view rationale, const ImpliedLevels& levels) {
  HardGateResult r;
  if (std::abs(shock.gdp_growth) > 10.0) r.violations.emplace_back("gdp_shock>10");
  if (levels.inflation > 20.0) r.violations.emplace_back("inflation>20");
  if (levels.interest_rate > 15.0) r.violations.emplace_back("rate>15");
  if (levels.interest_rate < -1.0) r.violations.emplace_back("rate<-1");
  if (shock.gdp_growth <= -2.0 && shock.inflation < 0.0 && shock.interest_rate > 0.0) {
    const auto text = lower(rationale);
    const auto& kw = contradiction_override_keywords();
    bool justified = std::any_of(kw.begin(), kw.end(), [&](const std::string& k) { return text.find(k) != std::string::npos; });
    if (!justified) r.violations.emplace_back("contradiction");
  }
  std::sort(r.violations.begin(), r.violations.end());
  r.pass = r.violations.empty();
  return r;
}

HardGateResult hard_gate(const MacroShock& shock, std::string_view rationale) {
  return hard_gate(shock, rationale, ImpliedLevels{shock.inflation, shock.interest_rate});
}

SoftScore soft_score(const MacroShock& shock, std::string_view rationale, const std::vector<std::string>& sectors) {
  SoftScore s;

  // Magnitude: full marks for shocks of 5-10 pp norm, quadratic ramp below, linear decay above.
  const double n = shock.norm();
  if (n <= 5.0) {
    s.magnitude = 5.0 * (n / 5.0) * (n / 5.0);
  } else if (n <= 10.0) {
    s.magnitude = 5.0;
  } else {
    s.magnitude = std::max(0.0, 5.0 - 0.5 * (n - 10.0));
  }

  // Coherence: distance of the rate move from a Taylor-style reaction plus sign-pattern penalties.
  const double taylor_gap = shock.interest_rate - (1.5 * shock.inflation + 0.5 * shock.gdp_growth);
  double c = 5.0 - 0.5 * std::abs(taylor_gap);
  if (shock.gdp_growth < 0.0 && shock.inflation < 0.0 && shock.interest_rate > 0.0) c -= 2.0;
  if (shock.inflation >= 2.0 && shock.interest_rate <= -1.0) c -= 1.5;
  s.coherence = std::clamp(c, 0.0, 5.0);

  const double words = static_cast<double>(word_count(rationale));
  const double n_sectors = static_cast<double>(
      std::count_if(sectors.begin(), sectors.end(), [](const std::string& x) { return !x.empty(); }));
  s.structure = 3.0 * std::min(1.0, words / 80.0) + 2.0 * std::min(1.0, n_sectors / 4.0);

  s.total = std::clamp(0.4 * s.magnitude + 0.4 * s.coherence + 0.2 * s.structure, 0.0, 5.0);
  return s;
}

double build_lambda(const MacroShock& shock, double regime_score, double theta) {
  const double size = std::min(1.0, shock.norm() / theta);
  return std::clamp(0.5 * size + 0.5 * regime_score, 0.0, 1.0);
}

AuditResult audit(const Scenario& s, const ingest::CountryBaseline& baseline, const RegimeClassifier& classifier,
                  const AuditOptions& opt) {
  AuditResult r;
  r.shock = derive_shock(s, baseline, opt.convention);
  auto gate = hard_gate(r.shock, s.rationale, implied_levels(s, baseline, opt.convention));
  r.hard_pass = gate.pass;
  r.hard_violations = std::move(gate.violations);
  r.regime = classifier.classify(s.rationale);
  r.lambda = build_lambda(r.shock, r.regime.score, opt.lambda_theta);
  r.soft = soft_score(r.shock, s.rationale, s.risk_sectors);
  r.accepted = r.hard_pass && r.soft.total >= opt.accept_threshold;
  return r;
}

Scenario annotate(Scenario s, const AuditResult& r) {
  s.plausibility_ok = r.accepted ? 1 : 0;
  s.plausibility_score = r.soft.total;
  s.regime_probs = r.regime.probs;
  s.regime_label = r.regime.label();
  s.regime_score = r.regime.score;
  s.lambda = r.lambda;
  return with_hash(std::move(s));
}

}  // namespace stresslab::plausibility
