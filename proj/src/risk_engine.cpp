#include "stresslab/risk_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stresslab/csv.hpp"
#include "stresslab/error.hpp"
#include "stresslab/parallel.hpp"
#include "stresslab/rng.hpp"

namespace stresslab::risk {

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& X) {
  if (X.rows() < 2) throw ConfigError("covariance needs at least two observations");
  const Eigen::MatrixXd c = X.rowwise() - X.colwise().mean();
  Eigen::MatrixXd S = (c.transpose() * c) / static_cast<double>(X.rows() - 1);
  return 0.5 * (S + S.transpose());
}

Eigen::MatrixXd pairwise_covariance(const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.cols();
  Eigen::MatrixXd S(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a; b < n; ++b) {
      double sa = 0.0, sb = 0.0;
      Eigen::Index m = 0;
      for (Eigen::Index t = 0; t < X.rows(); ++t) {
        if (std::isnan(X(t, a)) || std::isnan(X(t, b))) continue;
        sa += X(t, a);
        sb += X(t, b);
        ++m;
      }
      if (m < 2) throw ConfigError("covariance: fewer than two overlapping observations for a pair of assets");
      const double ma = sa / static_cast<double>(m), mb = sb / static_cast<double>(m);
      double c = 0.0;
      for (Eigen::Index t = 0; t < X.rows(); ++t) {
        if (std::isnan(X(t, a)) || std::isnan(X(t, b))) continue;
        c += (X(t, a) - ma) * (X(t, b) - mb);
      }
      S(a, b) = S(b, a) = c / static_cast<double>(m - 1);
    }
  }
  if (!X.hasNaN()) return S;
  // Pairwise estimates need not be PSD; clip negative eigenvalues.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.eigenvalues().minCoeff() >= 0.0) return S;
  Eigen::MatrixXd R = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (R + R.transpose());
}

CovariancePair estimate_covariances(const ingest::ReturnPanel& returns, const std::vector<std::string>& assets,
                                    const DateRange& calm, const std::vector<CrisisWindow>& crisis) {
  if (crisis.empty()) throw ConfigError("no crisis windows configured");
  CovariancePair pair;
  pair.assets = assets;
  pair.calm = pairwise_covariance(returns.window(calm, assets, true));
  std::vector<Eigen::MatrixXd> blocks;
  Eigen::Index rows = 0;
  for (const auto& w : crisis) {
    blocks.push_back(returns.window(w.range, assets, true));
    rows += blocks.back().rows();
  }
  Eigen::MatrixXd all(rows, static_cast<Eigen::Index>(assets.size()));
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    all.middleRows(at, b.rows()) = b;
    at += b.rows();
  }
  pair.crisis = pairwise_covariance(all);
  return pair;
}

Eigen::MatrixXd mix_covariance(const CovariancePair& pair, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  if (pair.calm.rows() != pair.crisis.rows() || pair.calm.cols() != pair.crisis.cols()) {
    throw ConfigError("calm and crisis covariances differ in shape");
  }
  if (lambda == 0.0) return pair.calm;
  if (lambda == 1.0) return pair.crisis;
  return (1.0 - lambda) * pair.calm + lambda * pair.crisis;
}

CholeskyResult safe_cholesky(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols()) throw ConfigError("safe_cholesky: matrix is not square");
  const Eigen::Index n = sigma.rows();
  double scale = n > 0 ? sigma.diagonal().mean() : 1.0;
  if (!(scale > 0.0)) scale = 1.0;
  for (double rel : {0.0, 1e-12, 1e-10, 1e-8, 1e-6}) {
    Eigen::MatrixXd m = sigma;
    m.diagonal().array() += rel * scale;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd L = llt.matrixL();
      if (L.allFinite()) return {L, rel * scale};
    }
  }
  // An all-zero matrix is PSD; its factor is zero.
  if (sigma.isZero(0.0)) return {Eigen::MatrixXd::Zero(n, n), 0.0};
  throw NumericalError("safe_cholesky: matrix not positive definite even with jitter 1e-6 x mean diagonal");
}

Eigen::MatrixXd scale_cov_for_vol_channel(const Eigen::MatrixXd& sigma, const MacroShock& shock,
                                          const ChannelParams& params) {
  const double f = 1.0 + params.vol_kappa * std::max(0.0, shock.inflation);
  return sigma * (f * f);
}

// --- portfolios -----------------------------------------------------------------------

Eigen::VectorXd Portfolio::dense(const std::vector<std::string>& assets) const {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(assets.size()));
  for (const auto& [ticker, weight] : weights) {
    auto it = std::find(assets.begin(), assets.end(), ticker);
    if (it == assets.end()) throw ConfigError("portfolio " + id + ": asset " + ticker + " not in the universe");
    w(it - assets.begin()) += weight;
  }
  return w;
}

void Portfolio::validate() const {
  if (weights.empty()) throw ConfigError("portfolio " + id + " has no assets");
  double sum = 0.0;
  for (const auto& [ticker, w] : weights) {
    if (!(w >= 0.0)) throw ConfigError("portfolio " + id + ": negative weight on " + ticker);
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("portfolio " + id + ": weights do not sum to 1");
}

Portfolio portfolio_a(const RunConfig& cfg) {
  Portfolio p{"A", cfg.portfolio_a};
  p.validate();
  return p;
}

Portfolio portfolio_b(const RunConfig& cfg, const ingest::PricePanel& prices) {
  std::vector<std::string> eligible;
  for (const auto& t : cfg.portfolio_b) {
    if (std::find(prices.tickers.begin(), prices.tickers.end(), t) == prices.tickers.end()) continue;
    if (prices.history_days(t) >= static_cast<std::size_t>(cfg.min_history_days)) eligible.push_back(t);
  }
  if (eligible.empty()) throw ConfigError("portfolio B: no sector ETF meets the history requirement");
  Portfolio p{"B", {}};
  const double w = 1.0 / static_cast<double>(eligible.size());
  for (auto& t : eligible) p.weights.emplace_back(std::move(t), w);
  // Fix rounding so the weights sum to one exactly.
  double rest = 1.0;
  for (std::size_t i = 0; i + 1 < p.weights.size(); ++i) rest -= p.weights[i].second;
  p.weights.back().second = rest;
  p.validate();
  return p;
}

std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::vol:
      return "vol";
    case Channel::linear:
      return "linear";
    case Channel::nonlinear:
      return "nonlinear";
  }
  return "vol";
}

Channel parse_channel(std::string_view s) {
  if (s == "vol") return Channel::vol;
  if (s == "linear") return Channel::linear;
  if (s == "nonlinear") return Channel::nonlinear;
  throw ConfigError("unknown channel '" + std::string(s) + "'");
}

// --- simulation -----------------------------------------------------------------------

std::vector<Eigen::MatrixXd> simulate_paths(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& L,
                                            const std::vector<Eigen::VectorXd>& weights, int n_paths,
                                            std::uint64_t key, double return_clip) {
  const Eigen::Index N = L.rows();
  const int H = static_cast<int>(mu.cols());
  if (L.cols() != N || mu.rows() != N) throw ConfigError("simulate_paths: drift and covariance dimensions differ");
  if (n_paths < 1 || H < 1) throw ConfigError("simulate_paths: need at least one path and one day");
  for (const auto& w : weights) {
    if (w.size() != N) throw ConfigError("simulate_paths: weight vector has the wrong dimension");
  }

  std::vector<Eigen::MatrixXd> out(weights.size(), Eigen::MatrixXd(n_paths, H));
  parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t p) {
    CounterRng rng(key, p);
    Eigen::VectorXd z(N), r(N);
    std::vector<Eigen::VectorXd> hold(weights.begin(), weights.end());
    for (int t = 0; t < H; ++t) {
      for (Eigen::Index i = 0; i < N; ++i) z(i) = rng.normal();
      r.noalias() = mu.col(t) + L.triangularView<Eigen::Lower>() * z;
      r = r.cwiseMax(-return_clip).cwiseMin(return_clip);
      for (std::size_t k = 0; k < hold.size(); ++k) {
        const double total = hold[k].sum();
        out[k](static_cast<Eigen::Index>(p), t) = hold[k].dot(r) / total;
        hold[k] = hold[k].cwiseProduct((r.array() + 1.0).matrix());
        hold[k] /= hold[k].sum();
      }
    }
  });
  return out;
}

double quantile_sorted(const std::vector<double>& x, double p) {
  if (x.empty()) throw ConfigError("quantile of an empty sample");
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

TailMetrics tail_from_losses(std::vector<double> losses) {
  std::sort(losses.begin(), losses.end());
  TailMetrics m;
  m.var95 = quantile_sorted(losses, 0.95);
  auto first = std::lower_bound(losses.begin(), losses.end(), m.var95);
  if (first == losses.end()) first = losses.end() - 1;
  m.cvar95 = std::accumulate(first, losses.end(), 0.0) / static_cast<double>(losses.end() - first);
  // Guard the invariant against summation rounding in a point-mass tail.
  m.cvar95 = std::max(m.cvar95, m.var95);
  return m;
}

TailMetrics tail_metrics(const Eigen::MatrixXd& paths) {
  const Eigen::Index n = paths.rows();
  if (n < 20) throw ConfigError("tail_metrics needs at least 20 paths");
  std::vector<double> losses(static_cast<std::size_t>(n)), dds(static_cast<std::size_t>(n));
  for (Eigen::Index p = 0; p < n; ++p) {
    double v = 1.0, peak = 1.0, worst = 0.0;
    for (Eigen::Index t = 0; t < paths.cols(); ++t) {
      v *= 1.0 + paths(p, t);
      peak = std::max(peak, v);
      worst = std::min(worst, v / peak - 1.0);
    }
    losses[static_cast<std::size_t>(p)] = -(v - 1.0);
    dds[static_cast<std::size_t>(p)] = worst;
  }
  TailMetrics m = tail_from_losses(losses);
  m.mdd = std::accumulate(dds.begin(), dds.end(), 0.0) / static_cast<double>(n);
  std::sort(dds.begin(), dds.end());
  m.mdd_p95 = quantile_sorted(dds, 0.05);
  return m;
}

Multiples multiples(const TailMetrics& m, const TailMetrics& base) {
  if (base.var95 == 0.0 || base.cvar95 == 0.0) throw NumericalError("multiples: zero baseline VaR or CVaR");
  Multiples x;
  x.var_mult = m.var95 / base.var95;
  x.cvar_mult = m.cvar95 / base.cvar95;
  x.dvar_pct = 100.0 * (m.var95 - base.var95) / std::abs(base.var95);
  x.dcvar_pct = 100.0 * (m.cvar95 - base.cvar95) / std::abs(base.cvar95);
  return x;
}

// --- channels -------------------------------------------------------------------------

std::uint64_t path_key(std::uint64_t seed, const std::string& scenario_hash, Channel channel) {
  return combine_keys(combine_keys(seed, key_from_string(scenario_hash)), static_cast<std::uint64_t>(channel) + 1);
}

Eigen::MatrixXd channel_drift(const Scenario& s, const MacroShock& shock, const factors::FactorModel& model,
                              const RunConfig& cfg, Channel channel) {
  const auto N = static_cast<Eigen::Index>(model.betas.assets.size());
  const int H = cfg.horizon_days;
  if (channel == Channel::vol) return Eigen::MatrixXd::Zero(N, H);
  const Eigen::Vector3d dF = factors::macro_to_factor(shock);
  Eigen::MatrixXd mu =
      factors::linear_drift(model.betas, dF, model.pca.factor_std, H, cfg.channel_params.drift_decay);
  if (channel == Channel::nonlinear) {
    mu += factors::nonlinear_drift(model.betas, dF, model.pca.factor_std, s.lambda, s.rag, s.use_news,
                                   cfg.channel_params, H);
  }
  return mu;
}

std::vector<RiskRow> run_channels(const Scenario& s, const MacroShock& shock, const ChannelInputs& in,
                                  const RunConfig& cfg, const std::vector<Channel>& channels) {
  if (!in.model || !in.cov) throw ConfigError("run_channels: factor model and covariances are required");
  if (s.plausibility_ok != 1) throw ConfigError("run_channels: scenario " + s.scenario_hash + " was not accepted");
  if (in.model->betas.assets != in.cov->assets) throw ConfigError("run_channels: beta and covariance assets differ");
  const auto& assets = in.cov->assets;

  std::vector<Eigen::VectorXd> weights;
  for (const auto& ps : in.portfolios) weights.push_back(ps.portfolio.dense(assets));

  const Eigen::MatrixXd sigma = mix_covariance(*in.cov, s.lambda);
  std::vector<RiskRow> rows;
  std::vector<std::vector<RiskRow>> by_channel;
  for (Channel ch : channels) {
    const Eigen::MatrixXd cov = ch == Channel::vol ? scale_cov_for_vol_channel(sigma, shock, cfg.channel_params) : sigma;
    const CholeskyResult chol = safe_cholesky(cov);
    const Eigen::MatrixXd mu = channel_drift(s, shock, *in.model, cfg, ch);
    auto paths = simulate_paths(mu, chol.L, weights, cfg.n_paths, path_key(cfg.seed, s.scenario_hash, ch),
                                cfg.channel_params.return_clip);
    std::vector<RiskRow> part;
    for (std::size_t k = 0; k < in.portfolios.size(); ++k) {
      RiskRow r;
      r.scenario_hash = s.scenario_hash;
      r.portfolio_id = in.portfolios[k].portfolio.id;
      r.channel = ch;
      r.metrics = tail_metrics(paths[k]);
      r.mult = multiples(r.metrics, in.portfolios[k].baseline);
      r.baseline_id = in.portfolios[k].baseline_id;
      r.epsilon_jitter = chol.epsilon;
      r.seed = cfg.seed;
      part.push_back(std::move(r));
    }
    by_channel.push_back(std::move(part));
  }
  for (std::size_t k = 0; k < in.portfolios.size(); ++k) {
    for (auto& part : by_channel) rows.push_back(part[k]);
  }
  return rows;
}

std::string risk_csv_header() {
  return "scenario_hash,portfolio_id,channel,var95,cvar95,mdd,mdd_p95,var_mult,cvar_mult,dvar_pct,dcvar_pct,"
         "baseline_id,epsilon_jitter,seed\n";
}

std::string risk_csv_row(const RiskRow& r) {
  using csv::num;
  return csv::join({r.scenario_hash, r.portfolio_id, std::string(to_string(r.channel)), num(r.metrics.var95),
                    num(r.metrics.cvar95), num(r.metrics.mdd), num(r.metrics.mdd_p95), num(r.mult.var_mult),
                    num(r.mult.cvar_mult), num(r.mult.dvar_pct), num(r.mult.dcvar_pct), r.baseline_id,
                    num(r.epsilon_jitter), std::to_string(r.seed)}) +
         "\n";
}

}  // namespace stresslab::risk
