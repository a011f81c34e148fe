#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "stresslab/core.hpp"
#include "stresslab/factor_model.hpp"
#include "stresslab/ingest.hpp"

namespace stresslab::risk {

struct CovariancePair {
  std::vector<std::string> assets;
  Eigen::MatrixXd calm;
  Eigen::MatrixXd crisis;
};

/// Covariances of daily log returns: calm over `calm`, crisis over the union of the
/// crisis windows. Assets with partial history use pairwise-complete estimates.
CovariancePair estimate_covariances(const ingest::ReturnPanel& returns, const std::vector<std::string>& assets,
                                    const DateRange& calm, const std::vector<CrisisWindow>& crisis);

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& X);
/// Pairwise-complete covariance over NaN-masked columns; repaired to PSD by eigenvalue
/// clipping when entries are missing.
Eigen::MatrixXd pairwise_covariance(const Eigen::MatrixXd& X);

Eigen::MatrixXd mix_covariance(const CovariancePair& pair, double lambda);

struct CholeskyResult {
  Eigen::MatrixXd L;
  double epsilon = 0.0;  // absolute jitter added to the diagonal
};

/// Tries jitters {0, 1e-12, 1e-10, 1e-8, 1e-6} x mean diagonal in order.
/// Throws NumericalError when even the largest fails.
CholeskyResult safe_cholesky(const Eigen::MatrixXd& sigma);

Eigen::MatrixXd scale_cov_for_vol_channel(const Eigen::MatrixXd& sigma, const MacroShock& shock,
                                          const ChannelParams& params);

struct Portfolio {
  std::string id;
  std::vector<std::pair<std::string, double>> weights;

  /// Weights expanded onto `assets` (zeros elsewhere). Throws ConfigError for unknown tickers.
  Eigen::VectorXd dense(const std::vector<std::string>& assets) const;
  void validate() const;
};

Portfolio portfolio_a(const RunConfig& cfg);
/// Equal-weighted sector ETFs with at least cfg.min_history_days of prices.
Portfolio portfolio_b(const RunConfig& cfg, const ingest::PricePanel& prices);

enum class Channel { vol, linear, nonlinear };
std::string_view to_string(Channel c);
Channel parse_channel(std::string_view s);

/// Per-portfolio n_paths x H daily portfolio returns. Asset returns are mu(:,t) + L z_t,
/// clipped to +/-return_clip; holdings drift with returns and weights are renormalized
/// daily. Path p draws from CounterRng(key, p).
std::vector<Eigen::MatrixXd> simulate_paths(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& L,
                                            const std::vector<Eigen::VectorXd>& weights, int n_paths,
                                            std::uint64_t key, double return_clip);

struct TailMetrics {
  double var95 = 0.0;
  double cvar95 = 0.0;
  double mdd = 0.0;      // mean per-path max drawdown (<= 0)
  double mdd_p95 = 0.0;  // 95th percentile drawdown severity (<= 0)
};

/// Hyndman-Fan type 7 quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double p);
/// var95/cvar95 of a loss sample; mdd fields left at 0.
TailMetrics tail_from_losses(std::vector<double> losses);
TailMetrics tail_metrics(const Eigen::MatrixXd& paths);

struct Multiples {
  double var_mult = 1.0;
  double cvar_mult = 1.0;
  double dvar_pct = 0.0;
  double dcvar_pct = 0.0;
};

/// Throws NumericalError on a zero baseline.
Multiples multiples(const TailMetrics& m, const TailMetrics& base);

struct PortfolioSetup {
  Portfolio portfolio;
  std::string baseline_id;
  TailMetrics baseline;
};

struct RiskRow {
  std::string scenario_hash;
  std::string portfolio_id;
  Channel channel = Channel::vol;
  TailMetrics metrics;
  Multiples mult;
  std::string baseline_id;
  double epsilon_jitter = 0.0;
  std::uint64_t seed = 0;
};

struct ChannelInputs {
  const factors::FactorModel* model = nullptr;
  const CovariancePair* cov = nullptr;
  std::vector<PortfolioSetup> portfolios;
};

std::uint64_t path_key(std::uint64_t seed, const std::string& scenario_hash, Channel channel);

/// The three stress channels for one accepted scenario; `shock` is the derived
/// percentage-point shock. Rows ordered by (portfolio, channel).
std::vector<RiskRow> run_channels(const Scenario& s, const MacroShock& shock, const ChannelInputs& in,
                                  const RunConfig& cfg, const std::vector<Channel>& channels = {
                                      Channel::vol, Channel::linear, Channel::nonlinear});

/// Drift matrix that run_channels feeds to the given channel.
Eigen::MatrixXd channel_drift(const Scenario& s, const MacroShock& shock, const factors::FactorModel& model,
                              const RunConfig& cfg, Channel channel);

std::string risk_csv_header();
std::string risk_csv_row(const RiskRow& r);

}  // namespace stresslab::risk
