#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "stresslab/csv.hpp"
#include "stresslab/error.hpp"
#include "stresslab/rng.hpp"
#include "stresslab/risk_engine.hpp"
#include "support.hpp"

using namespace stresslab;
using namespace stresslab::risk;

namespace {

Eigen::MatrixXd random_spd(std::mt19937_64& g, int n) {
  std::normal_distribution<double> d;
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = d(g);
  return A * A.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace

TEST(MixCovariance, EndpointsAndScalar) {
  std::mt19937_64 g(1);
  CovariancePair p{{}, random_spd(g, 4), random_spd(g, 4)};
  EXPECT_EQ(mix_covariance(p, 0.0), p.calm);
  EXPECT_EQ(mix_covariance(p, 1.0), p.crisis);
  CovariancePair s{{}, Eigen::MatrixXd::Constant(1, 1, 4.0), Eigen::MatrixXd::Constant(1, 1, 16.0)};
  EXPECT_EQ(mix_covariance(s, 0.5)(0, 0), 10.0);
  EXPECT_THROW(mix_covariance(p, 1.5), ConfigError);
}

TEST(MixCovariance, BetweenInputsAndSymmetric) {
  std::mt19937_64 g(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    CovariancePair p{{}, random_spd(g, 5), random_spd(g, 5)};
    auto m = mix_covariance(p, u(g));
    EXPECT_LT((m - m.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        EXPECT_GE(m(i, j), std::min(p.calm(i, j), p.crisis(i, j)) - 1e-12);
        EXPECT_LE(m(i, j), std::max(p.calm(i, j), p.crisis(i, j)) + 1e-12);
      }
  }
}

TEST(SafeCholesky, IdentityNeedsNoJitter) {
  auto r = safe_cholesky(Eigen::MatrixXd::Identity(4, 4));
  EXPECT_EQ(r.L, Eigen::MatrixXd::Identity(4, 4));
  EXPECT_EQ(r.epsilon, 0.0);
}

TEST(SafeCholesky, RankOnePsd) {
  Eigen::VectorXd v(4);
  v << 1.0, 2.0, -0.5, 0.25;
  Eigen::MatrixXd S = v * v.transpose();
  auto r = safe_cholesky(S);
  const double scale = S.diagonal().mean();
  EXPECT_LE(r.epsilon, 1e-10 * scale);
  EXPECT_LE((r.L * r.L.transpose() - S).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(SafeCholesky, SlightlyNegativeEigenvalue) {
  std::mt19937_64 g(3);
  Eigen::MatrixXd A = random_spd(g, 5);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  Eigen::VectorXd ev = es.eigenvalues();
  ev(0) = -1e-11;
  Eigen::MatrixXd S = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  S = 0.5 * (S + S.transpose());
  auto r = safe_cholesky(S);
  EXPECT_GT(r.epsilon, 0.0);
  Eigen::MatrixXd jittered = S;
  jittered.diagonal().array() += r.epsilon;
  EXPECT_LT((r.L * r.L.transpose() - jittered).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SafeCholesky, IndefiniteThrows) {
  Eigen::MatrixXd S = Eigen::MatrixXd::Identity(3, 3);
  S(2, 2) = -1.0;
  EXPECT_THROW(safe_cholesky(S), NumericalError);
}

TEST(VolScaling, RectifierAndFactor) {
  std::mt19937_64 g(4);
  Eigen::MatrixXd S = random_spd(g, 3);
  ChannelParams p;
  EXPECT_EQ(scale_cov_for_vol_channel(S, {-3, -1, 1}, p), S);
  Eigen::MatrixXd scaled = scale_cov_for_vol_channel(S, {-3, 3, 1}, p);
  EXPECT_LT((scaled - S * 3.0625).cwiseAbs().maxCoeff(), 1e-15 * S.cwiseAbs().maxCoeff() * 4);
  auto corr = [](const Eigen::MatrixXd& m) {
    Eigen::VectorXd d = m.diagonal().cwiseSqrt().cwiseInverse();
    return Eigen::MatrixXd(d.asDiagonal() * m * d.asDiagonal());
  };
  EXPECT_LT((corr(scaled) - corr(S)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(SimulatePaths, ZeroCovarianceZeroDrift) {
  Eigen::MatrixXd mu = Eigen::MatrixXd::Zero(2, 10), L = Eigen::MatrixXd::Zero(2, 2);
  auto out = simulate_paths(mu, L, {Eigen::Vector2d(0.5, 0.5)}, 30, 1, 0.2);
  EXPECT_EQ(out[0], Eigen::MatrixXd::Zero(30, 10));
}

TEST(SimulatePaths, ConstantDriftCompoundsDeterministically) {
  const int H = 20;
  Eigen::MatrixXd mu(2, H);
  mu.row(0).setConstant(0.01);
  mu.row(1).setConstant(-0.02);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(2, 2);
  auto out = simulate_paths(mu, L, {Eigen::Vector2d(0.6, 0.4)}, 25, 9, 0.2);
  // Buy-and-hold: value = 0.6 (1.01)^t + 0.4 (0.98)^t.
  for (int p = 0; p < 25; ++p) {
    double v = 1.0;
    for (int t = 0; t < H; ++t) v *= 1.0 + out[0](p, t);
    EXPECT_NEAR(v, 0.6 * std::pow(1.01, H) + 0.4 * std::pow(0.98, H), 1e-12);
  }
}

TEST(SimulatePaths, SingleAssetPortfolioEqualsAssetPath) {
  std::mt19937_64 g(5);
  Eigen::MatrixXd S = random_spd(g, 3) * 1e-4;
  Eigen::MatrixXd L = safe_cholesky(S).L;
  Eigen::MatrixXd mu = Eigen::MatrixXd::Constant(3, 15, 0.001);
  auto out = simulate_paths(mu, L, {Eigen::Vector3d(0, 1, 0)}, 40, 3, 0.2);
  for (int p = 0; p < 40; ++p) {
    CounterRng rng(3, static_cast<std::uint64_t>(p));
    for (int t = 0; t < 15; ++t) {
      Eigen::Vector3d z;
      for (int i = 0; i < 3; ++i) z(i) = rng.normal();  // draw order matters
      Eigen::Vector3d r = mu.col(t) + L * z;
      EXPECT_NEAR(out[0](p, t), std::clamp(r(1), -0.2, 0.2), 1e-15);
    }
  }
}

TEST(SimulatePaths, ClipAndDeterminism) {
  Eigen::MatrixXd L = Eigen::MatrixXd::Identity(2, 2);  // 100% daily vol
  Eigen::MatrixXd mu = Eigen::MatrixXd::Zero(2, 5);
  auto a = simulate_paths(mu, L, {Eigen::Vector2d(1, 0)}, 50, 4, 0.2);
  auto b = simulate_paths(mu, L, {Eigen::Vector2d(1, 0)}, 50, 4, 0.2);
  EXPECT_EQ(a[0], b[0]);
  EXPECT_LE(a[0].cwiseAbs().maxCoeff(), 0.2);
  EXPECT_THROW(simulate_paths(Eigen::MatrixXd::Zero(3, 5), L, {Eigen::Vector2d(1, 0)}, 5, 1, 0.2), ConfigError);
}

TEST(TailMetrics, OneToHundredPercent) {
  std::vector<double> losses;
  for (int i = 1; i <= 100; ++i) losses.push_back(i / 100.0);
  auto m = tail_from_losses(losses);
  EXPECT_NEAR(m.var95, 0.9505, 1e-12);
  auto o = testsupport::sort_tail(losses);
  EXPECT_EQ(m.var95, o.var95);
  EXPECT_EQ(m.cvar95, o.cvar95);
  EXPECT_NEAR(m.cvar95, (0.96 + 0.97 + 0.98 + 0.99 + 1.0) / 5, 1e-12);
}

TEST(TailMetrics, PointMassAndMonotonePath) {
  auto m = tail_from_losses(std::vector<double>(50, 0.03));
  EXPECT_EQ(m.var95, 0.03);
  EXPECT_NEAR(m.cvar95, 0.03, 1e-15);  // summation rounding only
  EXPECT_GE(m.cvar95, m.var95);
  Eigen::MatrixXd up = Eigen::MatrixXd::Constant(30, 10, 0.001);
  auto t = tail_metrics(up);
  EXPECT_EQ(t.mdd, 0.0);
  EXPECT_EQ(t.mdd_p95, 0.0);
  EXPECT_THROW(tail_metrics(Eigen::MatrixXd::Zero(10, 5)), ConfigError);
}

TEST(TailMetrics, DrawdownOracle) {
  Eigen::MatrixXd paths = Eigen::MatrixXd::Zero(20, 3);
  for (int p = 0; p < 20; ++p) paths.row(p) << 0.1, -0.5, 0.2;  // peak 1.1, trough 0.55
  auto t = tail_metrics(paths);
  EXPECT_NEAR(t.mdd, -0.5, 1e-12);
  EXPECT_NEAR(t.var95, -(1.1 * 0.5 * 1.2 - 1.0), 1e-12);
}

TEST(Multiples, IdentityAnchorAndErrors) {
  TailMetrics base{0.0491, 0.0932, 0, 0};
  auto id = multiples(base, base);
  EXPECT_EQ(id.var_mult, 1.0);
  EXPECT_EQ(id.cvar_mult, 1.0);
  EXPECT_EQ(id.dvar_pct, 0.0);
  auto m = multiples({0.0716, 0.1, 0, 0}, base);
  EXPECT_NEAR(m.var_mult, 0.0716 / 0.0491, 1e-15);
  EXPECT_NEAR(m.var_mult, 1.458, 5e-4);
  auto gfc = multiples({0.0283 * 6.0, 0.0434 * 4.45, 0, 0}, {0.0283, 0.0434, 0, 0});
  EXPECT_NEAR(gfc.dvar_pct, 500.0, 1e-9);
  EXPECT_THROW(multiples(base, {0.0, 0.1, 0, 0}), NumericalError);
}

TEST(Portfolios, WeightsAndHistoryRule) {
  testsupport::EngineFixture fx(42, 100);
  auto a = portfolio_a(fx.cfg);
  EXPECT_EQ(a.weights.size(), 3u);
  auto b = portfolio_b(fx.cfg, fx.prices);
  EXPECT_EQ(b.weights.size(), 10u);  // XLRE has more than 2500 days
  double sum = 0.0;
  for (auto& [t, w] : b.weights) sum += w;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  auto strict = fx.cfg;
  strict.min_history_days = 3000;
  auto b9 = portfolio_b(strict, fx.prices);
  EXPECT_EQ(b9.weights.size(), 9u);
  Portfolio bad{"X", {{"SPY", 0.7}, {"IEF", 0.2}}};
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_THROW(a.dense({"SPY", "IEF"}), ConfigError);
}

TEST(Covariances, SymmetricPsdWithLateStartingAsset) {
  testsupport::EngineFixture fx(42, 100);
  for (const auto* S : {&fx.cov.calm, &fx.cov.crisis}) {
    EXPECT_LT((*S - S->transpose()).cwiseAbs().maxCoeff(), 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(*S);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-15);
  }
  // Pairwise estimate equals the complete-case estimate when nothing is missing.
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(60, 3);
  EXPECT_LT((pairwise_covariance(X) - sample_covariance(X)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((sample_covariance(X) - testsupport::loop_covariance(X)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(RunChannels, LinearChannelInsulatedFromText) {
  testsupport::EngineFixture fx(42, 300);
  Scenario s = testsupport::accepted_exemplar();
  MacroShock shock{-3.0, 1.0, 1.5};
  auto base = run_channels(s, shock, fx.inputs(), fx.cfg);
  ASSERT_EQ(base.size(), 6u);

  Scenario t = s;
  t.rag = !t.rag;
  t.use_news = !t.use_news;
  t.rationale = "Entirely different narrative text.";
  auto toggled = run_channels(t, shock, fx.inputs(), fx.cfg);
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (base[i].channel == Channel::linear) {
      EXPECT_EQ(risk_csv_row(base[i]), risk_csv_row(toggled[i]));
    }
  }
  EXPECT_EQ(channel_drift(s, shock, fx.model, fx.cfg, Channel::linear),
            channel_drift(with_hash(t), shock, fx.model, fx.cfg, Channel::linear));
  // Flipping both flags cancels under equal rag and news weights, so flip one.
  Scenario rag_only = s;
  rag_only.rag = !rag_only.rag;
  EXPECT_NE(channel_drift(s, shock, fx.model, fx.cfg, Channel::nonlinear),
            channel_drift(rag_only, shock, fx.model, fx.cfg, Channel::nonlinear));
  EXPECT_EQ(channel_drift(s, shock, fx.model, fx.cfg, Channel::vol),
            Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(fx.model.betas.assets.size()), fx.cfg.horizon_days));
}

TEST(RunChannels, DeterministicAndOrdered) {
  testsupport::EngineFixture fx(42, 200);
  Scenario s = testsupport::accepted_exemplar();
  auto a = run_channels(s, {-3, 1, 1}, fx.inputs(), fx.cfg);
  auto b = run_channels(s, {-3, 1, 1}, fx.inputs(), fx.cfg);
  ASSERT_EQ(a.size(), 6u);
  const char* order[] = {"vol", "linear", "nonlinear"};
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(risk_csv_row(a[i]), risk_csv_row(b[i]));
    EXPECT_EQ(a[i].portfolio_id, i < 3 ? "A" : "B");
    EXPECT_EQ(to_string(a[i].channel), order[i % 3]);
    EXPECT_GE(a[i].metrics.cvar95, a[i].metrics.var95);
    EXPECT_LE(a[i].metrics.mdd, 0.0);
  }
  Scenario rejected = s;
  rejected.plausibility_ok = 0;
  EXPECT_THROW(run_channels(rejected, {-3, 1, 1}, fx.inputs(), fx.cfg), ConfigError);
}

TEST(RunChannels, UnstressedVolChannelMatchesCalmSimulation) {
  testsupport::EngineFixture fx(42, 4000);
  Scenario s = testsupport::accepted_exemplar();
  s.lambda = 0.0;
  s = with_hash(s);
  auto rows = run_channels(s, {0, 0, 0}, fx.inputs(), fx.cfg, {Channel::vol});
  auto L = safe_cholesky(fx.cov.calm).L;
  auto w = fx.portfolios[0].portfolio.dense(fx.cov.assets);
  auto paths = simulate_paths(Eigen::MatrixXd::Zero(L.rows(), 63), L, {w}, 4000, 777, 0.2);
  auto own = tail_metrics(paths[0]);
  // Binomial standard error of the 95% quantile, in loss units via the local density.
  std::vector<double> losses;
  for (Eigen::Index p = 0; p < paths[0].rows(); ++p) {
    double v = 1.0;
    for (Eigen::Index t = 0; t < 63; ++t) v *= 1.0 + paths[0](p, t);
    losses.push_back(1.0 - v);
  }
  std::sort(losses.begin(), losses.end());
  const double q_lo = quantile_sorted(losses, 0.95 - 2 * std::sqrt(0.95 * 0.05 / 4000));
  const double q_hi = quantile_sorted(losses, 0.95 + 2 * std::sqrt(0.95 * 0.05 / 4000));
  const double se = (q_hi - q_lo) / 4.0;
  EXPECT_NEAR(rows[0].metrics.var95, own.var95, 3.0 * std::sqrt(2.0) * se);
}

TEST(RunChannels, VarConvergesWhenPathsDouble) {
  testsupport::EngineFixture fx(42, 2000);
  Scenario s = testsupport::accepted_exemplar();
  auto small = run_channels(s, {-3, 1, 1}, fx.inputs(), fx.cfg, {Channel::linear});
  auto cfg2 = fx.cfg;
  cfg2.n_paths = 4000;
  auto large = run_channels(s, {-3, 1, 1}, fx.inputs(), cfg2, {Channel::linear});
  // Three binomial-quantile standard errors at n = 2000, with a normal density at the quantile.
  const double sigma = small[0].metrics.var95 / 1.645 + 1e-12;
  const double se = std::sqrt(0.95 * 0.05 / 2000) / (std::exp(-0.5 * 1.645 * 1.645) / std::sqrt(2 * M_PI)) * sigma;
  EXPECT_NEAR(small[0].metrics.var95, large[0].metrics.var95, 3.0 * se);
}

TEST(RiskCsv, HeaderMatchesRowWidth) {
  RiskRow r;
  r.scenario_hash = "h";
  r.portfolio_id = "A";
  r.baseline_id = "b";
  auto header = csv::parse(risk_csv_header());
  auto row = csv::parse(risk_csv_row(r));
  EXPECT_EQ(header[0].fields.size(), row[0].fields.size());
  EXPECT_EQ(header[0].fields[3], "var95");
  EXPECT_EQ(parse_channel("nonlinear"), Channel::nonlinear);
  EXPECT_THROW(parse_channel("quadratic"), ConfigError);
}
