#include "stresslab/factor_model.hpp"

#include <algorithm>
#include <cmath>

#include "stresslab/error.hpp"

namespace stresslab::factors {

Eigen::MatrixXd PcaFactors::standardized_scores() const {
  return scores * factor_std.cwiseInverse().asDiagonal();
}

PcaFactors fit_pca(const Eigen::MatrixXd& returns, std::uint64_t seed) {
  if (returns.cols() != 3) throw ConfigError("fit_pca expects 3 columns (SPY, IEF, GLD)");
  if (returns.rows() < 30) throw ConfigError("fit_pca needs at least 30 observations");
  if (!returns.allFinite()) throw ConfigError("fit_pca: non-finite returns");

  PcaFactors out;
  out.seed = seed;
  out.mean = returns.colwise().mean().transpose();
  const Eigen::MatrixXd X = returns.rowwise() - out.mean.transpose();
  const Eigen::Matrix3d cov = (X.transpose() * X) / static_cast<double>(X.rows() - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  if (es.info() != Eigen::Success) throw NumericalError("fit_pca: eigen-decomposition failed");
  const Eigen::Vector3d ev = es.eigenvalues();  // ascending
  const double top = ev(2);
  if (!(top > 0.0) || ev(0) <= 1e-12 * top) {
    Eigen::Vector3d null_vec = es.eigenvectors().col(0).cwiseAbs();
    Eigen::Index col = 0;
    null_vec.maxCoeff(&col);
    if (!(top > 0.0)) col = 0;
    throw NumericalError("fit_pca: rank-deficient covariance; degenerate column " + kFactorAssets[col]);
  }

  for (int k = 0; k < 3; ++k) {
    out.eigenvalues(k) = ev(2 - k);
    out.loadings.row(k) = es.eigenvectors().col(2 - k).transpose();
  }
  // anchor columns: PC1 -> SPY (0), PC2 -> GLD (2), PC3 -> IEF (1)
  constexpr int anchor[3] = {0, 2, 1};
  for (int k = 0; k < 3; ++k) {
    if (out.loadings(k, anchor[k]) < 0.0) out.loadings.row(k) *= -1.0;
  }
  out.scores = X * out.loadings.transpose();
  for (int k = 0; k < 3; ++k) {
    out.factor_std(k) = std::sqrt(out.scores.col(k).squaredNorm() / static_cast<double>(X.rows() - 1));
  }
  return out;
}

Eigen::Vector3d macro_to_factor(const MacroShock& s) {
  return {std::max(0.0, -s.gdp_growth / 100.0), std::max(0.0, s.inflation / 100.0),
          std::max(0.0, s.interest_rate / 100.0)};
}

Eigen::Matrix<double, 9, 1> poly_basis(const Eigen::Vector3d& f) {
  Eigen::Matrix<double, 9, 1> b;
  b << f(0), f(1), f(2), f(0) * f(0), f(1) * f(1), f(2) * f(2), f(0) * f(1), f(0) * f(2), f(1) * f(2);
  return b;
}

Eigen::VectorXd least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, bool& ridge) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() == X.cols()) return qr.solve(y);
  ridge = true;
  Eigen::MatrixXd G = X.transpose() * X;
  G.diagonal().array() += 1e-10;
  return G.ldlt().solve(X.transpose() * y);
}

BetaSet fit_betas(const Eigen::MatrixXd& asset_returns, const std::vector<std::string>& assets,
                  const Eigen::MatrixXd& z, double cap) {
  const Eigen::Index T = asset_returns.rows(), N = asset_returns.cols();
  if (N < 1) throw ConfigError("fit_betas: no assets");
  if (static_cast<std::size_t>(N) != assets.size()) throw ConfigError("fit_betas: asset names do not match columns");
  if (z.rows() != T || z.cols() != 3) throw ConfigError("fit_betas: factor scores not aligned with asset returns");
  if (T < 12) throw ConfigError("fit_betas: too few observations");

  Eigen::MatrixXd Xl(T, 4), Xp(T, 10);
  Xl.col(0).setOnes();
  Xp.col(0).setOnes();
  for (Eigen::Index t = 0; t < T; ++t) {
    Eigen::Vector3d f = z.row(t).transpose();
    Xl.block<1, 3>(t, 1) = f.transpose();
    Xp.block<1, 9>(t, 1) = poly_basis(f).transpose();
  }

  BetaSet b;
  b.assets = assets;
  b.linear.resize(N, 3);
  b.poly.resize(N, 9);
  b.linear_intercept.resize(N);
  b.poly_intercept.resize(N);
  b.caps = Eigen::VectorXd::Constant(N, cap);
  for (Eigen::Index i = 0; i < N; ++i) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index t = 0; t < T; ++t) {
      if (std::isfinite(asset_returns(t, i))) rows.push_back(t);
    }
    if (rows.size() < 12) throw ConfigError("fit_betas: too few observations for " + assets[static_cast<std::size_t>(i)]);
    Eigen::VectorXd y = asset_returns.col(i)(rows);
    Eigen::VectorXd cl = least_squares(Xl(rows, Eigen::all), y, b.ridge_fallback);
    Eigen::VectorXd cp = least_squares(Xp(rows, Eigen::all), y, b.ridge_fallback);
    b.linear_intercept(i) = cl(0);
    b.linear.row(i) = cl.tail(3).transpose();
    b.poly_intercept(i) = cp(0);
    b.poly.row(i) = cp.tail(9).transpose();
  }
  return b;
}

namespace {

Eigen::Vector3d normalized_shock(const Eigen::Vector3d& dF, const Eigen::Vector3d& factor_std) {
  if ((dF.array() < 0.0).any()) throw ConfigError("factor shock must be non-negative");
  if ((factor_std.array() <= 0.0).any()) throw NumericalError("zero factor standard deviation");
  return dF.cwiseQuotient(factor_std);
}

Eigen::MatrixXd decay_over_horizon(const Eigen::VectorXd& day1, int H, double decay) {
  if (H < 1) throw ConfigError("horizon must be at least one day");
  Eigen::MatrixXd out(day1.size(), H);
  double w = 1.0;
  for (int t = 0; t < H; ++t) {
    out.col(t) = day1 * w;
    w *= decay;
  }
  return out;
}

}  // namespace

Eigen::MatrixXd linear_drift(const BetaSet& betas, const Eigen::Vector3d& dF, const Eigen::Vector3d& factor_std,
                             int H, double decay) {
  const Eigen::Vector3d x = normalized_shock(dF, factor_std);
  return decay_over_horizon(betas.linear * x / static_cast<double>(H), H, decay);
}

double amplification(double lambda, bool rag, bool use_news, const ChannelParams& p) {
  return 1.0 + p.amp_lambda * lambda + (rag ? p.amp_rag : 0.0) + (use_news ? p.amp_news : 0.0);
}

Eigen::MatrixXd nonlinear_drift(const BetaSet& betas, const Eigen::Vector3d& dF, const Eigen::Vector3d& factor_std,
                                double lambda, bool rag, bool use_news, const ChannelParams& p, int H) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  const Eigen::Vector3d x = normalized_shock(dF, factor_std);
  Eigen::VectorXd day1 = betas.poly * poly_basis(x) / static_cast<double>(H);
  for (Eigen::Index i = 0; i < day1.size(); ++i) {
    const double cap = std::min(betas.caps(i), p.drift_cap_daily);
    day1(i) = std::clamp(day1(i), -cap, cap);
  }
  return decay_over_horizon(day1 * amplification(lambda, rag, use_news, p), H, p.drift_decay);
}

namespace {

Json rows(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

Json vec(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::MatrixXd mat_from(const Json& j, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != static_cast<std::size_t>(cols)) throw ParseError("factor model: ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), c) = j[r][c].get<double>();
  }
  return m;
}

Eigen::VectorXd vec_from(const Json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

}  // namespace

Json to_json(const FactorModel& m) {
  return Json{{"factor_assets", kFactorAssets},
              {"loadings", rows(m.pca.loadings)},
              {"eigenvalues", vec(m.pca.eigenvalues)},
              {"mean", vec(m.pca.mean)},
              {"factor_std", vec(m.pca.factor_std)},
              {"seed", m.pca.seed},
              {"assets", m.betas.assets},
              {"beta_linear", rows(m.betas.linear)},
              {"beta_poly", rows(m.betas.poly)},
              {"intercept_linear", vec(m.betas.linear_intercept)},
              {"intercept_poly", vec(m.betas.poly_intercept)},
              {"caps", vec(m.betas.caps)},
              {"ridge_fallback", m.betas.ridge_fallback}};
}

FactorModel factor_model_from_json(const Json& j) {
  FactorModel m;
  try {
    m.pca.loadings = mat_from(j.at("loadings"), 3);
    m.pca.eigenvalues = vec_from(j.at("eigenvalues"));
    m.pca.mean = vec_from(j.at("mean"));
    m.pca.factor_std = vec_from(j.at("factor_std"));
    m.pca.seed = j.at("seed").get<std::uint64_t>();
    m.betas.assets = j.at("assets").get<std::vector<std::string>>();
    m.betas.linear = mat_from(j.at("beta_linear"), 3);
    m.betas.poly = mat_from(j.at("beta_poly"), 9);
    m.betas.linear_intercept = vec_from(j.at("intercept_linear"));
    m.betas.poly_intercept = vec_from(j.at("intercept_poly"));
    m.betas.caps = vec_from(j.at("caps"));
    m.betas.ridge_fallback = j.at("ridge_fallback").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("factor model JSON: ") + e.what());
  }
  if (m.pca.eigenvalues.size() != 3 || m.pca.mean.size() != 3 || m.pca.factor_std.size() != 3) {
    throw ParseError("factor model JSON: factor vectors must have 3 entries");
  }
  const auto n = static_cast<Eigen::Index>(m.betas.assets.size());
  if (m.betas.linear.rows() != n || m.betas.poly.rows() != n || m.betas.caps.size() != n) {
    throw ParseError("factor model JSON: beta rows do not match assets");
  }
  return m;
}

}  // namespace stresslab::factors
