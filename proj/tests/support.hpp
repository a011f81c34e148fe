#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stresslab/core.hpp"
#include "stresslab/factor_model.hpp"
#include "stresslab/ingest.hpp"
#include "stresslab/risk_engine.hpp"
#include "stresslab/synthetic.hpp"

namespace testsupport {

using stresslab::Json;

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("stresslab_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path data_dir() { return STRESSLAB_DATA_DIR; }

/// The published Canada exemplar: shock, flags, and regime annotations as recorded,
/// with locally written title and rationale text.
inline Json canada_exemplar() {
  return Json{
      {"country", "Canada"},
      {"title", "Funding squeeze and commodity slump hit Canada in late 2026"},
      {"gdp_growth", -0.8},
      {"inflation", 1.6},
      {"interest_rate", 5.75},
      {"rationale",
       "A funding crisis among regional lenders abroad spreads into global credit markets and widens "
       "spreads for Canadian borrowers. Weaker industrial demand pushes base metal and energy prices "
       "lower, cutting export receipts and business investment. Tighter bank funding squeezes credit "
       "to construction and resource firms while equity and commodity valuations fall, which weakens "
       "household confidence. Output contracts over the quarter and headline inflation eases with "
       "softer demand and cheaper imports, while the central bank keeps policy rates elevated for a "
       "while to contain the currency and funding stress before easing later in the year."},
      {"risk_sectors",
       {"Energy and base metals exporters", "Commercial real estate and construction",
        "Regional banks and non-bank lenders", "Insurance", "Export-dependent manufacturing"}},
      {"rag", false},
      {"use_news", true},
      {"model", "gpt-5-mini-2025-08-07"},
      {"model_version", "gpt-5-mini-2025-08-07"},
      {"provider", "OpenAI"},
      {"prompt_variant", "v10_contagion"},
      {"prompt_hash", "..."},
      {"ctx_hash", "..."},
      {"seed", 42},
      {"timestamp_utc", 1763141778000},
      {"scenario_hash", "..."},
      {"plausibility_ok", 1},
      {"plausibility_score", 3.0},
      {"regime_label_text", "stress"},
      {"regime_score_text", 0.5332708434},
      {"regime_p_normal", 0.0016932811},
      {"regime_p_stress", 0.9300717115},
      {"regime_p_crisis", 0.0682349652}};
}

inline stresslab::ingest::CountryBaseline canada_baseline() {
  return {"Canada", 1.4, 2.0, 4.25, "WEO-2025-04"};
}

/// Cyclic Jacobi eigenvalue solver for symmetric matrices, ascending.
inline std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off < 1e-30 * std::max(1.0, a.squaredNorm())) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = a(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

/// Covariance with an explicit double loop.
inline Eigen::MatrixXd loop_covariance(const Eigen::MatrixXd& x) {
  const Eigen::Index t = x.rows(), n = x.cols();
  std::vector<double> mean(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < t; ++i) mean[j] += x(i, j);
    mean[j] /= static_cast<double>(t);
  }
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < t; ++i) s += (x(i, a) - mean[a]) * (x(i, b) - mean[b]);
      c(a, b) = s / static_cast<double>(t - 1);
    }
  return c;
}

/// var95 by type 7 interpolation and cvar95 as the mean of losses at or above it, computed
/// from a full sort.
struct SortTail {
  double var95;
  double cvar95;
};

inline SortTail sort_tail(std::vector<double> losses) {
  std::sort(losses.begin(), losses.end());
  const double h = 0.95 * static_cast<double>(losses.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  const double var = lo + 1 < losses.size() ? losses[lo] + frac * (losses[lo + 1] - losses[lo]) : losses[lo];
  double sum = 0.0;
  int count = 0;
  for (double l : losses) {
    if (l >= var) {
      sum += l;
      ++count;
    }
  }
  return {var, sum / count};
}

inline double brute_dispersion(const std::vector<stresslab::MacroShock>& x) {
  double total = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (j <= i) continue;
      const double dg = x[i].gdp_growth - x[j].gdp_growth;
      const double dp = x[i].inflation - x[j].inflation;
      const double dr = x[i].interest_rate - x[j].interest_rate;
      total += std::sqrt(dg * dg + dp * dp + dr * dr);
      ++pairs;
    }
  return total / pairs;
}

/// Factor model, covariances and portfolios fitted on the synthetic price history, as the
/// fit-factors stage does.
struct EngineFixture {
  stresslab::RunConfig cfg = stresslab::default_config();
  stresslab::ingest::PricePanel prices;
  stresslab::ingest::ReturnPanel returns;
  stresslab::factors::FactorModel model;
  stresslab::risk::CovariancePair cov;
  std::vector<stresslab::risk::PortfolioSetup> portfolios;

  explicit EngineFixture(std::uint64_t seed = 42, int n_paths = 2000) {
    using namespace stresslab;
    cfg.n_paths = n_paths;
    prices = synthetic::generate_prices(seed);
    returns = ingest::log_returns(prices);
    const std::vector<std::string> fa(factors::kFactorAssets.begin(), factors::kFactorAssets.end());
    model.pca = factors::fit_pca(returns.window(cfg.pca_window, fa), cfg.seed);
    auto pa = risk::portfolio_a(cfg);
    auto pb = risk::portfolio_b(cfg, prices);
    std::vector<std::string> universe;
    for (const auto* p : {&pa, &pb})
      for (const auto& [t, w] : p->weights)
        if (std::find(universe.begin(), universe.end(), t) == universe.end()) universe.push_back(t);
    model.betas = factors::fit_betas(returns.window(cfg.pca_window, universe, true), universe,
                                     model.pca.standardized_scores(), cfg.channel_params.drift_cap_daily);
    cov = risk::estimate_covariances(returns, universe, cfg.calm_window, cfg.crisis_windows);
    portfolios = {{pa, "fixed", {0.05, 0.08, 0.0, 0.0}}, {pb, "fixed", {0.08, 0.12, 0.0, 0.0}}};
  }

  stresslab::risk::ChannelInputs inputs() const { return {&model, &cov, portfolios}; }
};

/// The exemplar after audit against the Canada baseline, with its hash filled in.
inline stresslab::Scenario accepted_exemplar() {
  auto s = *stresslab::validate_scenario(canada_exemplar()).scenario;
  s.plausibility_ok = 1;
  s.lambda = 0.45;
  return stresslab::with_hash(s);
}

}  // namespace testsupport
