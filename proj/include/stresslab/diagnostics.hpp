#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stresslab/core.hpp"

namespace stresslab::diagnostics {

/// Mean pairwise Euclidean distance in raw percentage points. Throws ConfigError for S < 2.
double dispersion(const std::vector<MacroShock>& shocks);

struct DispersionKey {
  std::string group;  // country or prompt variant
  bool rag = false;
  bool use_news = false;
  std::string model;
  bool operator==(const DispersionKey&) const = default;
  auto operator<=>(const DispersionKey&) const = default;
};

struct DispersionStat {
  DispersionKey key;
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n = 0;
};

/// Dispersion with a bootstrap CI over the per-scenario mean distances to the others
/// (their average is the dispersion). The interval is widened to contain the point value.
DispersionStat dispersion_stat(const DispersionKey& key, const std::vector<MacroShock>& shocks, int n_resamples,
                               std::uint64_t seed);

struct QcResult {
  std::vector<DispersionStat> kept;
  std::vector<std::string> removed;  // one log line per removal
};

/// Drops entries with value > threshold; a value equal to the threshold is kept.
QcResult qc_filter(const std::vector<DispersionStat>& stats, double threshold = 20.0);

struct ConfidenceInterval {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Percentile bootstrap of the mean. Throws ConfigError for fewer than two values.
ConfidenceInterval bootstrap_ci(const std::vector<double>& values, int n_resamples = 10000, double level = 0.95,
                                std::uint64_t seed = 0);

struct AnovaRecord {
  double value = 0.0;
  std::string country;
  std::string portfolio_id;
  std::string prompt_variant;
  bool rag = false;
  bool use_news = false;
};

struct AnovaRow {
  std::string effect;
  std::string metric;
  double ss = 0.0;
  int df = 0;
  double f_stat = 0.0;
  double p_value = 1.0;
  double partial_eta2 = 0.0;
};

/// Generic main-effects ANOVA over categorical factors (Type II sums of squares).
/// `levels[f][i]` is the level of factor f for observation i. Factors with one level are
/// skipped. Throws NumericalError naming aliased factors when the design is singular.
std::vector<AnovaRow> anova_main_effects(const std::vector<double>& y, const std::vector<std::string>& factor_names,
                                         const std::vector<std::vector<std::string>>& levels,
                                         const std::string& metric);

/// Factors portfolio_id, country, prompt_variant, rag, use_news.
std::vector<AnovaRow> anova_eta2(const std::vector<AnovaRecord>& table, const std::string& metric);

struct CellOutcome {
  std::string country;
  std::string prompt_variant;
  bool rag = false;
  bool use_news = false;
  double var_mult_linear = 0.0;
  double var_mult_nonlinear = 0.0;
};

struct FairnessCard {
  std::string portfolio;
  std::size_t cells_total = 0;
  std::size_t rows_with_outcome = 0;
  std::size_t flips = 0;
  std::size_t outliers_z = 0;
  std::size_t outliers_mad = 0;
  double gap_var_linear = 0.0;
  double gap_var_nonlinear = 0.0;
};

/// Robust z-scores use 0.6745 (x - median) / MAD with cutoff 3.5; standard z uses cutoff 3.
std::size_t count_z_outliers(const std::vector<double>& x, double cutoff = 3.0);
std::size_t count_mad_outliers(const std::vector<double>& x, double cutoff = 3.5);

/// Card over the factorial grid countries x variants x rag_levels x news_levels. Cells are
/// means of the outcomes sharing a key. A flip is a (country, variant, rag) pair whose
/// news-on minus news-off difference of nonlinear VaR multiples changes sign when the two
/// means are perturbed by +/-1% in opposite directions. Outliers are counted over cell
/// means of the nonlinear VaR multiple; gaps are max-min of country means.
FairnessCard fairness_card(const std::string& portfolio, const std::vector<CellOutcome>& outcomes,
                           const std::vector<std::string>& countries, const std::vector<std::string>& variants,
                           const std::vector<bool>& rag_levels, const std::vector<bool>& news_levels);

}  // namespace stresslab::diagnostics
