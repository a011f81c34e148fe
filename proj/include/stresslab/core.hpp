#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "stresslab/dates.hpp"

namespace stresslab {

using Json = nlohmann::json;

/// Macro shock in percentage points: (Δg, Δπ, Δr). Depending on the scenario schema the
/// interest-rate slot may hold a level; see plausibility::derive_shock.
struct MacroShock {
  double gdp_growth = 0.0;
  double inflation = 0.0;
  double interest_rate = 0.0;

  double norm() const;
  bool finite() const;
  bool operator==(const MacroShock&) const = default;
};

enum class RegimeLabel { normal = 0, stress = 1, crisis = 2 };

std::string_view to_string(RegimeLabel label);
std::optional<RegimeLabel> parse_regime_label(std::string_view text);

/// One structured stress scenario. Write-once record; field names in JSON follow the
/// published scenario schema.
struct Scenario {
  std::string country;
  std::string title;
  MacroShock shock;  // raw values as emitted by the generator
  std::string rationale;
  std::vector<std::string> risk_sectors;

  bool rag = false;
  bool use_news = false;
  std::string model;
  std::string model_version;
  std::string provider;
  std::string prompt_variant;
  std::string prompt_hash;
  std::string ctx_hash;
  std::int64_t seed = 0;
  std::int64_t timestamp_utc = 0;  // epoch milliseconds
  std::string scenario_hash;

  int plausibility_ok = 0;
  double plausibility_score = 0.0;
  RegimeLabel regime_label = RegimeLabel::normal;
  double regime_score = 0.0;
  std::array<double, 3> regime_probs{1.0, 0.0, 0.0};  // normal, stress, crisis
  double lambda = 0.0;

  bool operator==(const Scenario&) const = default;
};

/// Coefficients of the volatility and nonlinear stress channels.
struct ChannelParams {
  double vol_kappa = 0.25;
  double drift_decay = 0.97;
  double amp_lambda = 0.10;
  double amp_rag = 0.02;
  double amp_news = 0.02;
  double drift_cap_daily = 0.005;
  double return_clip = 0.20;

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
  bool operator==(const ChannelParams&) const = default;
};

struct CrisisWindow {
  std::string episode;  // "GFC", "COVID"
  DateRange range;
  bool operator==(const CrisisWindow&) const = default;
};

struct RunConfig {
  std::vector<std::string> countries;
  std::string model_id = "synthetic-macro-v1";
  bool rag = true;       // include RAG-on cells in the grid
  bool use_news = true;  // include news-on cells in the grid
  std::vector<std::string> prompt_variants;
  int horizon_days = 63;
  int n_paths = 20000;
  std::uint64_t seed = 42;
  ChannelParams channel_params;

  bool rates_are_levels = true;
  bool growth_inflation_are_levels = false;
  int min_history_days = 2500;
  double accept_threshold = 2.0;
  double lambda_theta = 8.0;
  int top_k = 3;
  int headline_k = 20;
  std::string retrieval_date = "2025-09-30";
  std::int64_t timestamp_utc = 1763141778000;
  int bootstrap_resamples = 50000;
  int ci_resamples = 10000;
  int garch_paths = 20000;
  double qc_threshold = 20.0;

  DateRange pca_window{Date::from_ymd(2015, 1, 1), Date::from_ymd(2025, 12, 31)};
  DateRange calm_window{Date::from_ymd(2012, 1, 1), Date::from_ymd(2019, 12, 31)};
  DateRange baseline_window{Date::from_ymd(2000, 1, 1), Date::from_ymd(2025, 12, 31)};
  std::vector<CrisisWindow> crisis_windows{
      {"GFC", {Date::from_ymd(2008, 1, 1), Date::from_ymd(2009, 12, 31)}},
      {"COVID", {Date::from_ymd(2020, 1, 1), Date::from_ymd(2020, 12, 31)}}};

  // Sorted by ticker, the order a parsed JSON config yields.
  std::vector<std::pair<std::string, double>> portfolio_a{{"GLD", 0.1}, {"IEF", 0.3}, {"SPY", 0.6}};
  std::vector<std::string> portfolio_b{"XLE", "XLF", "XLK", "XLY", "XLI",
                                       "XLU", "XLV", "XLP", "XLB", "XLRE"};

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

const std::vector<std::string>& g7_countries();
/// The thirty prompt-variant identifiers, e.g. "v10_contagion".
const std::vector<std::string>& default_prompt_variants();

RunConfig default_config();
/// Fields missing from `j` keep their defaults. Throws ConfigError.
RunConfig config_from_json(const Json& j);
Json to_json(const RunConfig& cfg);
RunConfig load_config(const std::filesystem::path& path);

// --- canonical form -------------------------------------------------------------------

class SerializationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Compact JSON with lexicographically sorted keys and doubles at 17 significant digits.
/// Throws SerializationError on non-finite numbers.
std::string canonical_dump(const Json& j);

/// Scenario as a JSON object with the schema's field names.
Json to_json(const Scenario& s, bool include_hash = true);
/// Canonical bytes of every field except scenario_hash.
std::string canonical_serialize(const Scenario& s);
/// SHA-256 hex of canonical_serialize(s).
std::string compute_scenario_hash(const Scenario& s);
/// Returns a copy with scenario_hash filled in.
Scenario with_hash(Scenario s);

struct Violation {
  enum class Kind { missing, wrong_type, out_of_range, inconsistent };
  std::string field;
  Kind kind;
  std::string message;
  bool operator==(const Violation&) const = default;
};

struct ValidationResult {
  std::optional<Scenario> scenario;
  std::vector<Violation> violations;
  bool ok() const { return scenario.has_value(); }
};

/// Checks the seven content fields (required) and any provenance/audit fields present.
/// Accepts both `regime_label_text` / `regime_label` and `regime_score_text` / `regime_score`.
ValidationResult validate_scenario(const Json& raw);

}  // namespace stresslab
