#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stresslab/core.hpp"

namespace stresslab::factors {

/// Column order expected by fit_pca.
inline const std::array<std::string, 3> kFactorAssets{"SPY", "IEF", "GLD"};

struct PcaFactors {
  Eigen::Matrix3d loadings;    // rows PC1..PC3, columns SPY, IEF, GLD
  Eigen::Vector3d eigenvalues; // descending
  Eigen::Vector3d mean;        // column means removed before projection
  Eigen::Vector3d factor_std;  // sample std of each score series
  Eigen::MatrixXd scores;      // T x 3, not serialized
  std::uint64_t seed = 0;

  /// Scores divided by factor_std.
  Eigen::MatrixXd standardized_scores() const;
};

/// Sample-covariance PCA with sign alignment: PC1 loads positively on SPY, PC2 on GLD,
/// PC3 on IEF. Throws ConfigError for T < 30 and NumericalError for a rank-deficient
/// covariance (the message names the degenerate column).
PcaFactors fit_pca(const Eigen::MatrixXd& returns, std::uint64_t seed);

/// Rectified factor shock from a macro shock in percentage points.
Eigen::Vector3d macro_to_factor(const MacroShock& shock);

/// Nine-term basis: f1, f2, f3, f1^2, f2^2, f3^2, f1 f2, f1 f3, f2 f3.
Eigen::Matrix<double, 9, 1> poly_basis(const Eigen::Vector3d& f);

struct BetaSet {
  std::vector<std::string> assets;
  Eigen::MatrixXd linear;          // N x 3
  Eigen::MatrixXd poly;            // N x 9
  Eigen::VectorXd linear_intercept;
  Eigen::VectorXd poly_intercept;
  Eigen::VectorXd caps;            // N, bound on |daily polynomial drift|
  bool ridge_fallback = false;
};

/// Per-asset OLS (with intercept) on the standardized factor scores, and on their
/// polynomial basis. NaN asset returns drop that row for that asset only. A rank-deficient
/// design falls back to ridge with 1e-10.
BetaSet fit_betas(const Eigen::MatrixXd& asset_returns, const std::vector<std::string>& assets,
                  const Eigen::MatrixXd& standardized_scores, double cap);

/// Intercept-plus-regressors least squares used by fit_betas. Sets `ridge` on fallback.
Eigen::VectorXd least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, bool& ridge);

/// N x H drift: day 1 = linear * (dF / factor_std) / H, day t = day 1 * decay^(t-1).
Eigen::MatrixXd linear_drift(const BetaSet& betas, const Eigen::Vector3d& dF, const Eigen::Vector3d& factor_std,
                             int horizon_days, double decay);

double amplification(double lambda, bool rag, bool use_news, const ChannelParams& params);

/// N x H drift from the polynomial betas evaluated at dF / factor_std, spread over the
/// horizon, capped per asset, amplified, then decayed like linear_drift.
Eigen::MatrixXd nonlinear_drift(const BetaSet& betas, const Eigen::Vector3d& dF, const Eigen::Vector3d& factor_std,
                                double lambda, bool rag, bool use_news, const ChannelParams& params,
                                int horizon_days);

struct FactorModel {
  PcaFactors pca;
  BetaSet betas;
};

Json to_json(const FactorModel& m);
FactorModel factor_model_from_json(const Json& j);

}  // namespace stresslab::factors
