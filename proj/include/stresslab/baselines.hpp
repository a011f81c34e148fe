#pragma once

#include <string>
#include <vector>

#include "stresslab/core.hpp"
#include "stresslab/ingest.hpp"
#include "stresslab/risk_engine.hpp"

namespace stresslab::baselines {

struct BaselineResult {
  std::string method;  // bootstrap, ewma, garch_t
  double var95 = 0.0;
  double cvar95 = 0.0;
  std::optional<DateRange> window;
  Json params = Json::object();

  risk::TailMetrics tail() const { return {var95, cvar95, 0.0, 0.0}; }
};

/// Daily simple returns of a daily-rebalanced portfolio over `window`. Members without a
/// price on a day are left out and the remaining weights rescaled.
std::vector<double> portfolio_returns(const ingest::ReturnPanel& returns, const risk::Portfolio& portfolio,
                                      const DateRange& window);

/// Horizon loss of every overlapping block, in start order.
std::vector<double> block_losses(const std::vector<double>& returns, int horizon);

/// Uniform block starts, n_resamples draws. Throws ConfigError if the series is too short.
BaselineResult bootstrap_var(const std::vector<double>& returns, int horizon, int n_resamples, std::uint64_t seed);

/// Latest EWMA variance as the weighted sum (1-lambda) sum_i lambda^i r_{T-1-i}^2.
double ewma_variance(const std::vector<double>& returns, double lambda);
/// Same value via sigma2_t = lambda sigma2_{t-1} + (1-lambda) r_t^2 from sigma2 = 0.
double ewma_variance_recursive(const std::vector<double>& returns, double lambda);

inline constexpr double kZ95 = 1.6448536269514722;

BaselineResult ewma_var(const std::vector<double>& returns, double lambda = 0.94, int horizon = 63);

struct GarchFit {
  double omega = 0.0, alpha = 0.0, beta = 0.0, nu = 0.0;
  double mu = 0.0;        // sample mean removed before fitting
  double loglik = 0.0;
  double last_h = 0.0;    // conditional variance of the last observation
  double last_eps = 0.0;  // last demeaned return
  int starts_converged = 0;
};

/// Student-t GARCH(1,1) maximum likelihood via Nelder-Mead over a fixed 8-point start
/// grid. Throws NumericalError when no start converges.
GarchFit fit_garch_t(const std::vector<double>& returns);

/// Negative log-likelihood used by fit_garch_t (returns already demeaned).
double garch_t_nll(const std::vector<double>& eps, double omega, double alpha, double beta, double nu);

BaselineResult garch_var(const GarchFit& fit, int horizon, int n_paths, std::uint64_t seed);

/// Two fixed macro shocks: (-3, +1, +1) and (-5, +2, +1.5) percentage points.
const std::vector<MacroShock>& benchmark_shocks();

/// Benchmark scenarios per country, in the same raw conventions as generated scenarios.
std::vector<Scenario> deterministic_benchmarks(const std::vector<ingest::CountryBaseline>& baselines,
                                               const RunConfig& cfg);

struct EpisodeMetrics {
  std::string episode;
  double var_max_block = 0.0;   // worst block loss; VaR and CVaR coincide
  double cvar_max_block = 0.0;
  double var_quantile = 0.0;    // 95% quantile of the episode's block losses
  double cvar_quantile = 0.0;
  std::size_t blocks = 0;
};

EpisodeMetrics episode_metrics(const ingest::ReturnPanel& returns, const risk::Portfolio& portfolio,
                               const CrisisWindow& window, int horizon);

struct CrisisEnvelope {
  std::string episode;
  std::string baseline_id;
  std::string variant;  // max_block (primary) or episode_quantile
  double var_mult = 0.0;
  double cvar_mult = 0.0;
};

CrisisEnvelope envelope_from_metrics(const std::string& episode, const std::string& variant, double var, double cvar,
                                     const std::string& baseline_id, const BaselineResult& baseline);

struct NamedBaseline {
  std::string id;  // unconditional_2000_2025, calm_2012_2019
  BaselineResult result;
};

/// Every (episode, baseline, variant) combination, max_block rows first.
std::vector<CrisisEnvelope> crisis_envelopes(const std::vector<EpisodeMetrics>& episodes,
                                             const std::vector<NamedBaseline>& baselines);

std::string baseline_csv_header();
std::string baseline_csv_row(const BaselineResult& r);

}  // namespace stresslab::baselines
