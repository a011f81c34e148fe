#include "stresslab/baselines.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/normal.hpp>

#include "stresslab/csv.hpp"
#include "stresslab/error.hpp"
#include "stresslab/rng.hpp"

namespace stresslab::baselines {

std::vector<double> portfolio_returns(const ingest::ReturnPanel& returns, const risk::Portfolio& portfolio,
                                      const DateRange& window) {
  std::vector<std::string> tickers;
  std::vector<double> w;
  for (const auto& [t, x] : portfolio.weights) {
    tickers.push_back(t);
    w.push_back(x);
  }
  const Eigen::MatrixXd R = returns.window(window, tickers, true);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(R.rows()));
  for (Eigen::Index t = 0; t < R.rows(); ++t) {
    double r = 0.0, wsum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double x = R(t, static_cast<Eigen::Index>(i));
      if (std::isnan(x)) continue;
      r += w[i] * std::expm1(x);
      wsum += w[i];
    }
    if (wsum > 0.0) out.push_back(r / wsum);
  }
  return out;
}

std::vector<double> block_losses(const std::vector<double>& r, int horizon) {
  if (horizon < 1 || r.size() < static_cast<std::size_t>(horizon)) return {};
  std::vector<double> out;
  out.reserve(r.size() - static_cast<std::size_t>(horizon) + 1);
  for (std::size_t s = 0; s + static_cast<std::size_t>(horizon) <= r.size(); ++s) {
    double v = 1.0;
    for (int h = 0; h < horizon; ++h) v *= 1.0 + r[s + static_cast<std::size_t>(h)];
    out.push_back(-(v - 1.0));
  }
  return out;
}

BaselineResult bootstrap_var(const std::vector<double>& returns, int horizon, int n_resamples, std::uint64_t seed) {
  if (returns.size() < static_cast<std::size_t>(horizon) + 1) {
    throw ConfigError("bootstrap_var: series shorter than horizon + 1");
  }
  if (n_resamples < 20) throw ConfigError("bootstrap_var: need at least 20 resamples");
  const auto all = block_losses(returns, horizon);
  CounterRng rng(seed, 0x626f6f74ULL);
  std::vector<double> losses(static_cast<std::size_t>(n_resamples));
  for (auto& l : losses) l = all[rng.below(all.size())];
  auto tail = risk::tail_from_losses(std::move(losses));
  BaselineResult r;
  r.method = "bootstrap";
  r.var95 = tail.var95;
  r.cvar95 = tail.cvar95;
  r.params = Json{{"horizon", horizon}, {"n_resamples", n_resamples}, {"seed", seed}, {"blocks", all.size()}};
  return r;
}

double ewma_variance(const std::vector<double>& r, double lambda) {
  double s = 0.0, w = 1.0;
  for (auto it = r.rbegin(); it != r.rend(); ++it) {
    s += w * (*it) * (*it);
    w *= lambda;
  }
  return (1.0 - lambda) * s;
}

double ewma_variance_recursive(const std::vector<double>& r, double lambda) {
  double s2 = 0.0;
  for (double x : r) s2 = lambda * s2 + (1.0 - lambda) * x * x;
  return s2;
}

BaselineResult ewma_var(const std::vector<double>& returns, double lambda, int horizon) {
  if (returns.size() < 2) throw ConfigError("ewma_var: need at least two returns");
  if (!(lambda > 0.0 && lambda < 1.0)) throw ConfigError("ewma_var: lambda must lie in (0, 1)");
  const double sigma_h = std::sqrt(ewma_variance(returns, lambda) * horizon);
  const boost::math::normal_distribution<double> nd;
  BaselineResult r;
  r.method = "ewma";
  r.var95 = kZ95 * sigma_h;
  r.cvar95 = sigma_h * boost::math::pdf(nd, kZ95) / 0.05;
  r.params = Json{{"lambda", lambda}, {"horizon", horizon}, {"sigma_daily", std::sqrt(ewma_variance(returns, lambda))}};
  return r;
}

// --- GARCH(1,1)-t ---------------------------------------------------------------------

double garch_t_nll(const std::vector<double>& eps, double omega, double alpha, double beta, double nu) {
  if (!(omega > 0.0 && alpha >= 0.0 && beta >= 0.0 && alpha + beta < 1.0 && nu > 2.0)) {
    return std::numeric_limits<double>::infinity();
  }
  double var0 = 0.0;
  for (double e : eps) var0 += e * e;
  var0 /= static_cast<double>(eps.size());
  const double c = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(std::numbers::pi * (nu - 2.0));
  double h = var0, nll = 0.0, prev = 0.0;
  for (std::size_t t = 0; t < eps.size(); ++t) {
    if (t > 0) h = omega + alpha * prev * prev + beta * h;
    const double e = eps[t];
    nll -= c - 0.5 * std::log(h) - 0.5 * (nu + 1.0) * std::log1p(e * e / ((nu - 2.0) * h));
    prev = e;
  }
  return std::isfinite(nll) ? nll : std::numeric_limits<double>::infinity();
}

namespace {

using Vec4 = std::array<double, 4>;

struct GarchParams {
  double omega, alpha, beta, nu;
};

// Unconstrained coordinates: log omega, logit persistence, logit alpha share, log(nu - 2.01).
GarchParams decode(const Vec4& x) {
  auto logistic = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  const double p = 0.9999 * logistic(x[1]);
  const double share = logistic(x[2]);
  return {std::exp(x[0]), p * share, p * (1.0 - share), 2.01 + std::exp(x[3])};
}

Vec4 encode(const GarchParams& g) {
  auto logit = [](double v) { return std::log(v / (1.0 - v)); };
  const double p = g.alpha + g.beta;
  return {std::log(g.omega), logit(p / 0.9999), logit(g.alpha / p), std::log(g.nu - 2.01)};
}

struct NmResult {
  Vec4 x;
  double f;
  bool converged;
};

template <class F>
NmResult nelder_mead(F&& f, Vec4 x0, double step, int max_iter, double tol) {
  std::array<Vec4, 5> s;
  std::array<double, 5> fv;
  s[0] = x0;
  for (int i = 0; i < 4; ++i) {
    s[i + 1] = x0;
    s[i + 1][i] += step;
  }
  for (int i = 0; i < 5; ++i) fv[i] = f(s[i]);
  std::array<int, 5> idx{0, 1, 2, 3, 4};
  for (int it = 0; it < max_iter; ++it) {
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    const int best = idx[0], worst = idx[4], second = idx[3];
    if (std::isfinite(fv[worst]) && std::abs(fv[worst] - fv[best]) <= tol * (1.0 + std::abs(fv[best]))) {
      return {s[best], fv[best], true};
    }
    Vec4 c{};
    for (int k = 0; k < 4; ++k) {
      for (int d = 0; d < 4; ++d) c[d] += s[idx[k]][d] / 4.0;
    }
    auto along = [&](double t) {
      Vec4 p;
      for (int d = 0; d < 4; ++d) p[d] = c[d] + t * (s[worst][d] - c[d]);
      return p;
    };
    Vec4 xr = along(-1.0);
    double fr = f(xr);
    if (fr < fv[best]) {
      Vec4 xe = along(-2.0);
      double fe = f(xe);
      if (fe < fr) {
        s[worst] = xe;
        fv[worst] = fe;
      } else {
        s[worst] = xr;
        fv[worst] = fr;
      }
    } else if (fr < fv[second]) {
      s[worst] = xr;
      fv[worst] = fr;
    } else {
      Vec4 xc = fr < fv[worst] ? along(-0.5) : along(0.5);
      double fc = f(xc);
      if (fc < std::min(fr, fv[worst])) {
        s[worst] = xc;
        fv[worst] = fc;
      } else {
        for (int k = 1; k < 5; ++k) {
          const int j = idx[k];
          for (int d = 0; d < 4; ++d) s[j][d] = s[best][d] + 0.5 * (s[j][d] - s[best][d]);
          fv[j] = f(s[j]);
        }
      }
    }
  }
  int best = static_cast<int>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  return {s[best], fv[best], false};
}

}  // namespace

GarchFit fit_garch_t(const std::vector<double>& returns) {
  if (returns.size() < 250) throw ConfigError("fit_garch_t: need at least 250 returns");
  double mu = 0.0;
  for (double r : returns) mu += r;
  mu /= static_cast<double>(returns.size());
  std::vector<double> eps(returns.size());
  double var = 0.0;
  for (std::size_t i = 0; i < returns.size(); ++i) {
    eps[i] = returns[i] - mu;
    var += eps[i] * eps[i];
  }
  var /= static_cast<double>(eps.size());
  if (!(var > 0.0)) throw NumericalError("fit_garch_t: zero-variance series");

  auto objective = [&](const Vec4& x) {
    const auto g = decode(x);
    return garch_t_nll(eps, g.omega, g.alpha, g.beta, g.nu);
  };

  GarchFit best;
  double best_f = std::numeric_limits<double>::infinity();
  Vec4 best_x{};
  for (double a : {0.05, 0.10}) {
    for (double b : {0.80, 0.90}) {
      for (double nu : {5.0, 8.0}) {
        const Vec4 x0 = encode({var * (1.0 - a - b), a, b, nu});
        NmResult r = nelder_mead(objective, x0, 0.5, 4000, 1e-10);
        // A restart from the optimum polishes a collapsed simplex.
        r = nelder_mead(objective, r.x, 0.1, 4000, 1e-12);
        if (r.converged && std::isfinite(r.f)) {
          ++best.starts_converged;
          if (r.f < best_f) {
            best_f = r.f;
            best_x = r.x;
          }
        }
      }
    }
  }
  if (best.starts_converged == 0) throw NumericalError("fit_garch_t: no start converged");
  const auto g = decode(best_x);
  best.omega = g.omega;
  best.alpha = g.alpha;
  best.beta = g.beta;
  best.nu = g.nu;
  best.mu = mu;
  best.loglik = -best_f;
  double h = var;
  for (std::size_t t = 1; t < eps.size(); ++t) h = g.omega + g.alpha * eps[t - 1] * eps[t - 1] + g.beta * h;
  best.last_h = h;
  best.last_eps = eps.back();
  return best;
}

BaselineResult garch_var(const GarchFit& fit, int horizon, int n_paths, std::uint64_t seed) {
  if (!(fit.omega > 0.0 && fit.alpha >= 0.0 && fit.beta >= 0.0 && fit.alpha + fit.beta < 1.0 && fit.nu > 2.0)) {
    throw ConfigError("garch_var: invalid GARCH parameters");
  }
  const double scale = std::sqrt((fit.nu - 2.0) / fit.nu);
  std::vector<double> losses(static_cast<std::size_t>(n_paths));
  for (int p = 0; p < n_paths; ++p) {
    CounterRng rng(combine_keys(seed, 0x6761726368ULL), static_cast<std::uint64_t>(p));
    double h = fit.omega + fit.alpha * fit.last_eps * fit.last_eps + fit.beta * fit.last_h;
    double v = 1.0;
    for (int t = 0; t < horizon; ++t) {
      const double e = std::sqrt(h) * rng.student_t(fit.nu) * scale;
      v *= 1.0 + fit.mu + e;
      h = fit.omega + fit.alpha * e * e + fit.beta * h;
    }
    losses[static_cast<std::size_t>(p)] = -(v - 1.0);
  }
  auto tail = risk::tail_from_losses(std::move(losses));
  BaselineResult r;
  r.method = "garch_t";
  r.var95 = tail.var95;
  r.cvar95 = tail.cvar95;
  r.params = Json{{"omega", fit.omega}, {"alpha", fit.alpha},  {"beta", fit.beta},     {"nu", fit.nu},
                  {"mu", fit.mu},       {"loglik", fit.loglik}, {"n_paths", n_paths},   {"horizon", horizon},
                  {"seed", seed},       {"start_grid", "alpha{0.05,0.1} x beta{0.8,0.9} x nu{5,8}"}};
  return r;
}

// --- deterministic benchmarks ---------------------------------------------------------

const std::vector<MacroShock>& benchmark_shocks() {
  static const std::vector<MacroShock> shocks{{-3.0, 1.0, 1.0}, {-5.0, 2.0, 1.5}};
  return shocks;
}

std::vector<Scenario> deterministic_benchmarks(const std::vector<ingest::CountryBaseline>& baselines,
                                               const RunConfig& cfg) {
  static const char* kTitles[] = {"Benchmark: 2008-09 style downturn", "Benchmark: severe stagflationary downturn"};
  static const char* kRationale[] = {
      "Fixed benchmark shock: output contracts by three points while inflation and the policy rate each rise by "
      "one point, resembling a global financial crisis style recession with tighter credit.",
      "Fixed benchmark shock: output contracts by five points, inflation rises two points and the policy rate "
      "rises one and a half points, a severe stagflationary stress with financial strain."};
  std::vector<Scenario> out;
  for (const auto& country : cfg.countries) {
    const auto& b = ingest::find_baseline(baselines, country);
    for (std::size_t k = 0; k < benchmark_shocks().size(); ++k) {
      const auto& shock = benchmark_shocks()[k];
      Scenario s;
      s.country = country;
      s.title = kTitles[k];
      s.shock.gdp_growth = cfg.growth_inflation_are_levels ? b.gdp_growth + shock.gdp_growth : shock.gdp_growth;
      s.shock.inflation = cfg.growth_inflation_are_levels ? b.inflation + shock.inflation : shock.inflation;
      s.shock.interest_rate = cfg.rates_are_levels ? b.interest_rate + shock.interest_rate : shock.interest_rate;
      s.rationale = kRationale[k];
      s.risk_sectors = {"Banks", "Construction", "Consumer discretionary"};
      s.model = "deterministic";
      s.model_version = "benchmark-v1";
      s.provider = "deterministic";
      s.prompt_variant = k == 0 ? "benchmark_1" : "benchmark_2";
      s.seed = static_cast<std::int64_t>(cfg.seed);
      s.timestamp_utc = cfg.timestamp_utc;
      out.push_back(with_hash(std::move(s)));
    }
  }
  return out;
}

// --- crisis envelopes -----------------------------------------------------------------

EpisodeMetrics episode_metrics(const ingest::ReturnPanel& returns, const risk::Portfolio& portfolio,
                               const CrisisWindow& window, int horizon) {
  if (returns.dates.empty() || window.range.start < returns.dates.front() || window.range.end > returns.dates.back()) {
    throw ConfigError("crisis window " + window.episode + " lies outside the price history");
  }
  const auto r = portfolio_returns(returns, portfolio, window.range);
  const auto losses = block_losses(r, horizon);
  if (losses.empty()) throw ConfigError("crisis window " + window.episode + " is shorter than the horizon");
  EpisodeMetrics m;
  m.episode = window.episode;
  m.blocks = losses.size();
  m.var_max_block = m.cvar_max_block = *std::max_element(losses.begin(), losses.end());
  const auto tail = risk::tail_from_losses(losses);
  m.var_quantile = tail.var95;
  m.cvar_quantile = tail.cvar95;
  return m;
}

CrisisEnvelope envelope_from_metrics(const std::string& episode, const std::string& variant, double var, double cvar,
                                     const std::string& baseline_id, const BaselineResult& baseline) {
  const auto m = risk::multiples({var, cvar, 0.0, 0.0}, baseline.tail());
  return {episode, baseline_id, variant, m.var_mult, m.cvar_mult};
}

std::vector<CrisisEnvelope> crisis_envelopes(const std::vector<EpisodeMetrics>& episodes,
                                             const std::vector<NamedBaseline>& baselines) {
  std::vector<CrisisEnvelope> out;
  for (const auto& e : episodes) {
    for (const auto& b : baselines) {
      out.push_back(envelope_from_metrics(e.episode, "max_block", e.var_max_block, e.cvar_max_block, b.id, b.result));
    }
  }
  for (const auto& e : episodes) {
    for (const auto& b : baselines) {
      out.push_back(
          envelope_from_metrics(e.episode, "episode_quantile", e.var_quantile, e.cvar_quantile, b.id, b.result));
    }
  }
  return out;
}

std::string baseline_csv_header() { return "method,var95,cvar95,params_json\n"; }

std::string baseline_csv_row(const BaselineResult& r) {
  return csv::join({r.method, csv::num(r.var95), csv::num(r.cvar95), canonical_dump(r.params)}) + "\n";
}

}  // namespace stresslab::baselines
