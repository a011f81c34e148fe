#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "stresslab/core.hpp"
#include "stresslab/ingest.hpp"

namespace stresslab::plausibility {

struct RegimeResult {
  std::array<double, 3> probs{};  // normal, stress, crisis
  double score = 0.0;             // in [0, 1]
  RegimeLabel label() const;
};

/// Narrative regime classifier. A neural NLI model can implement this interface; the
/// lexical classifier below is the built-in implementation.
class RegimeClassifier {
 public:
  virtual ~RegimeClassifier() = default;
  virtual RegimeResult classify(std::string_view rationale) const = 0;
  virtual std::string id() const = 0;
};

/// Keyword-weighted scoring over normal/stress/crisis lexicons with a prior peaked at
/// normal. score = 0.5 * p_stress + 1.0 * p_crisis.
RegimeResult lexical_regime_fallback(std::string_view rationale);

class LexicalRegimeClassifier final : public RegimeClassifier {
 public:
  RegimeResult classify(std::string_view rationale) const override { return lexical_regime_fallback(rationale); }
  std::string id() const override { return "lexical-regime-v1"; }
};

struct ShockConvention {
  bool rates_are_levels = true;
  bool growth_inflation_are_levels = false;
};

/// Converts the raw scenario values into percentage-point shocks against the baseline.
/// Throws ConfigError when the baseline belongs to another country.
MacroShock derive_shock(const Scenario& s, const ingest::CountryBaseline& baseline, ShockConvention conv);

/// Implied post-shock levels for the hard gate's inflation and rate bounds.
struct ImpliedLevels {
  double inflation = 0.0;
  double interest_rate = 0.0;
};

ImpliedLevels implied_levels(const Scenario& s, const ingest::CountryBaseline& baseline, ShockConvention conv);

struct HardGateResult {
  bool pass = true;
  std::vector<std::string> violations;  // sorted
};

/// Phrases that mark a recession + disinflation + hikes combination as deliberate.
const std::vector<std::string>& contradiction_override_keywords();

/// Rejects |Δg| > 10, inflation level > 20, rate level > 15 or < -1, and Δg <= -2 with
/// Δπ < 0 and Δr > 0 unless the rationale names a policy trade-off.
HardGateResult hard_gate(const MacroShock& shock, std::string_view rationale, const ImpliedLevels& levels);
/// Treats the shock values themselves as the implied levels.
HardGateResult hard_gate(const MacroShock& shock, std::string_view rationale);

struct SoftScore {
  double magnitude = 0.0;
  double coherence = 0.0;
  double structure = 0.0;
  double total = 0.0;  // 0.4 / 0.4 / 0.2 weighted mean, in [0, 5]
};

SoftScore soft_score(const MacroShock& shock, std::string_view rationale, const std::vector<std::string>& sectors);

/// λ = clip(0.5 * min(1, ‖shock‖ / theta) + 0.5 * regime_score, 0, 1).
double build_lambda(const MacroShock& shock, double regime_score, double theta = 8.0);

struct AuditOptions {
  ShockConvention convention;
  double accept_threshold = 2.0;
  double lambda_theta = 8.0;
};

struct AuditResult {
  bool hard_pass = false;
  std::vector<std::string> hard_violations;
  SoftScore soft;
  RegimeResult regime;
  MacroShock shock;
  double lambda = 0.0;
  bool accepted = false;
};

/// Runs the full two-layer audit and regime tagging.
AuditResult audit(const Scenario& s, const ingest::CountryBaseline& baseline, const RegimeClassifier& classifier,
                  const AuditOptions& options);

/// Copies audit outcomes into the scenario's annotation fields and recomputes its hash.
Scenario annotate(Scenario s, const AuditResult& result);

}  // namespace stresslab::plausibility
