#include "stresslab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <limits>
#include <set>
#include <tuple>

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>

#include "stresslab/csv.hpp"
#include "stresslab/error.hpp"
#include "stresslab/risk_engine.hpp"
#include "stresslab/rng.hpp"

namespace stresslab::diagnostics {

namespace {

double distance(const MacroShock& a, const MacroShock& b) {
  const double dg = a.gdp_growth - b.gdp_growth, di = a.inflation - b.inflation, dr = a.interest_rate - b.interest_rate;
  return std::sqrt(dg * dg + di * di + dr * dr);
}

}  // namespace

double dispersion(const std::vector<MacroShock>& x) {
  const std::size_t S = x.size();
  if (S < 2) throw ConfigError("dispersion is undefined for fewer than two scenarios");
  double sum = 0.0;
  for (std::size_t i = 0; i < S; ++i) {
    for (std::size_t j = i + 1; j < S; ++j) sum += distance(x[i], x[j]);
  }
  return 2.0 * sum / (static_cast<double>(S) * static_cast<double>(S - 1));
}

DispersionStat dispersion_stat(const DispersionKey& key, const std::vector<MacroShock>& x, int n_resamples,
                               std::uint64_t seed) {
  DispersionStat st;
  st.key = key;
  st.n = x.size();
  st.value = dispersion(x);
  std::vector<double> per(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (i != j) per[i] += distance(x[i], x[j]);
    }
    per[i] /= static_cast<double>(x.size() - 1);
  }
  const auto ci = bootstrap_ci(per, n_resamples, 0.95, seed);
  st.ci_low = std::min(ci.lo, st.value);
  st.ci_high = std::max(ci.hi, st.value);
  return st;
}

QcResult qc_filter(const std::vector<DispersionStat>& stats, double threshold) {
  QcResult out;
  for (const auto& s : stats) {
    if (s.value > threshold) {
      out.removed.push_back("removed " + s.key.group + " rag=" + std::to_string(s.key.rag) +
                            " news=" + std::to_string(s.key.use_news) + " model=" + s.key.model +
                            " dispersion=" + csv::num(s.value));
    } else {
      out.kept.push_back(s);
    }
  }
  return out;
}

ConfidenceInterval bootstrap_ci(const std::vector<double>& v, int n_resamples, double level, std::uint64_t seed) {
  if (v.size() < 2) throw ConfigError("bootstrap_ci needs at least two values");
  if (n_resamples < 1 || !(level > 0.0 && level < 1.0)) throw ConfigError("bootstrap_ci: invalid settings");
  ConfidenceInterval ci;
  ci.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  std::vector<double> means(static_cast<std::size_t>(n_resamples));
  CounterRng rng(seed, 0x6369ULL);
  for (auto& m : means) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += v[rng.below(v.size())];
    m = s / static_cast<double>(v.size());
  }
  std::sort(means.begin(), means.end());
  const double a = 0.5 * (1.0 - level);
  ci.lo = risk::quantile_sorted(means, a);
  ci.hi = risk::quantile_sorted(means, 1.0 - a);
  // Constant inputs can put the resampled mean one ulp away from the direct mean.
  ci.lo = std::min(ci.lo, ci.mean);
  ci.hi = std::max(ci.hi, ci.mean);
  return ci;
}

// --- ANOVA ----------------------------------------------------------------------------

namespace {

struct Coded {
  std::string name;
  Eigen::MatrixXd dummies;  // n x (levels - 1)
};

Eigen::MatrixXd design(const std::vector<Coded>& factors, std::size_t skip, Eigen::Index n) {
  Eigen::Index cols = 1;
  for (std::size_t f = 0; f < factors.size(); ++f) {
    if (f != skip) cols += factors[f].dummies.cols();
  }
  Eigen::MatrixXd X(n, cols);
  X.col(0).setOnes();
  Eigen::Index at = 1;
  for (std::size_t f = 0; f < factors.size(); ++f) {
    if (f == skip) continue;
    X.middleCols(at, factors[f].dummies.cols()) = factors[f].dummies;
    at += factors[f].dummies.cols();
  }
  return X;
}

struct Fit {
  double rss;
  Eigen::Index rank;
};

Fit fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  Eigen::VectorXd b = qr.solve(y);
  return {(y - X * b).squaredNorm(), qr.rank()};
}

}  // namespace

std::vector<AnovaRow> anova_main_effects(const std::vector<double>& yv, const std::vector<std::string>& names,
                                         const std::vector<std::vector<std::string>>& levels,
                                         const std::string& metric) {
  const auto n = static_cast<Eigen::Index>(yv.size());
  if (names.size() != levels.size()) throw ConfigError("anova: factor names and level columns differ");
  std::vector<Coded> factors;
  for (std::size_t f = 0; f < names.size(); ++f) {
    if (levels[f].size() != yv.size()) throw ConfigError("anova: factor " + names[f] + " has the wrong length");
    std::set<std::string> uniq(levels[f].begin(), levels[f].end());
    if (uniq.size() < 2) continue;
    std::vector<std::string> lv(uniq.begin(), uniq.end());
    Coded c{names[f], Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(lv.size() - 1))};
    for (Eigen::Index i = 0; i < n; ++i) {
      auto pos = std::lower_bound(lv.begin(), lv.end(), levels[f][static_cast<std::size_t>(i)]) - lv.begin();
      if (pos > 0) c.dummies(i, pos - 1) = 1.0;
    }
    factors.push_back(std::move(c));
  }
  if (factors.empty()) return {};

  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(yv.data(), n);
  const Eigen::MatrixXd Xf = design(factors, factors.size(), n);
  const Fit full = fit(Xf, y);
  if (full.rank < Xf.cols()) {
    std::vector<std::string> aliased;
    for (std::size_t f = 0; f < factors.size(); ++f) {
      const Fit red = fit(design(factors, f, n), y);
      if (full.rank - red.rank < factors[f].dummies.cols()) aliased.push_back(factors[f].name);
    }
    std::string msg = "anova: singular design; aliased factors:";
    for (const auto& a : aliased) msg += " " + a;
    throw NumericalError(msg);
  }
  const double tss = (y.array() - y.mean()).square().sum();
  const auto df_res = static_cast<int>(n - full.rank);
  const bool saturated = full.rss <= 1e-12 * std::max(tss, 1e-300) || df_res == 0;

  std::vector<AnovaRow> rows;
  for (std::size_t f = 0; f < factors.size(); ++f) {
    const Fit red = fit(design(factors, f, n), y);
    AnovaRow r;
    r.effect = factors[f].name;
    r.metric = metric;
    r.df = static_cast<int>(full.rank - red.rank);
    r.ss = std::max(0.0, red.rss - full.rss);
    if (saturated) {
      r.partial_eta2 = r.ss > 0.0 ? 1.0 : 0.0;
      r.p_value = r.ss > 0.0 ? 0.0 : 1.0;
      r.f_stat = r.ss > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    } else {
      r.partial_eta2 = r.ss / (r.ss + full.rss);
      r.f_stat = (r.ss / r.df) / (full.rss / df_res);
      boost::math::fisher_f_distribution<double> F(r.df, df_res);
      r.p_value = boost::math::cdf(boost::math::complement(F, r.f_stat));
    }
    rows.push_back(r);
  }
  return rows;
}

std::vector<AnovaRow> anova_eta2(const std::vector<AnovaRecord>& t, const std::string& metric) {
  std::vector<double> y;
  std::vector<std::vector<std::string>> lv(5);
  for (const auto& r : t) {
    y.push_back(r.value);
    lv[0].push_back(r.portfolio_id);
    lv[1].push_back(r.country);
    lv[2].push_back(r.prompt_variant);
    lv[3].push_back(r.rag ? "on" : "off");
    lv[4].push_back(r.use_news ? "on" : "off");
  }
  return anova_main_effects(y, {"portfolio_id", "country", "prompt_variant", "rag", "use_news"}, lv, metric);
}

// --- fairness -------------------------------------------------------------------------

std::size_t count_z_outliers(const std::vector<double>& x, double cutoff) {
  if (x.size() < 2) return 0;
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / static_cast<double>(x.size() - 1));
  if (!(sd > 0.0)) return 0;
  return static_cast<std::size_t>(std::count_if(x.begin(), x.end(), [&](double v) { return std::abs(v - m) / sd > cutoff; }));
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return risk::quantile_sorted(v, 0.5);
}

}  // namespace

std::size_t count_mad_outliers(const std::vector<double>& x, double cutoff) {
  if (x.size() < 2) return 0;
  const double med = median(x);
  std::vector<double> dev;
  for (double v : x) dev.push_back(std::abs(v - med));
  const double mad = median(dev);
  if (!(mad > 0.0)) return 0;
  return static_cast<std::size_t>(
      std::count_if(x.begin(), x.end(), [&](double v) { return 0.6745 * std::abs(v - med) / mad > cutoff; }));
}

FairnessCard fairness_card(const std::string& portfolio, const std::vector<CellOutcome>& outcomes,
                           const std::vector<std::string>& countries, const std::vector<std::string>& variants,
                           const std::vector<bool>& rag_levels, const std::vector<bool>& news_levels) {
  using Key = std::tuple<std::string, std::string, bool, bool>;
  struct Acc {
    double lin = 0.0, nl = 0.0;
    int n = 0;
  };
  std::map<Key, Acc> cells;
  for (const auto& o : outcomes) {
    auto& a = cells[{o.country, o.prompt_variant, o.rag, o.use_news}];
    a.lin += o.var_mult_linear;
    a.nl += o.var_mult_nonlinear;
    ++a.n;
  }

  FairnessCard card;
  card.portfolio = portfolio;
  card.cells_total = countries.size() * variants.size() * rag_levels.size() * news_levels.size();

  std::vector<double> nl_means;
  std::map<std::string, std::pair<double, int>> lin_by_country, nl_by_country;
  for (const auto& c : countries) {
    for (const auto& v : variants) {
      for (bool rag : rag_levels) {
        for (bool news : news_levels) {
          auto it = cells.find({c, v, rag, news});
          if (it == cells.end()) continue;
          ++card.rows_with_outcome;
          const double lin = it->second.lin / it->second.n, nl = it->second.nl / it->second.n;
          nl_means.push_back(nl);
          lin_by_country[c].first += lin;
          ++lin_by_country[c].second;
          nl_by_country[c].first += nl;
          ++nl_by_country[c].second;
        }
        auto on = cells.find({c, v, rag, true});
        auto off = cells.find({c, v, rag, false});
        if (on != cells.end() && off != cells.end()) {
          const double a = on->second.nl / on->second.n, b = off->second.nl / off->second.n;
          const double up = 1.01 * a - 0.99 * b, down = 0.99 * a - 1.01 * b;
          if ((up > 0.0) != (down > 0.0)) ++card.flips;
        }
      }
    }
  }
  card.outliers_z = count_z_outliers(nl_means);
  card.outliers_mad = count_mad_outliers(nl_means);
  auto gap = [](const std::map<std::string, std::pair<double, int>>& m) {
    if (m.empty()) return 0.0;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& [c, s] : m) {
      const double mean = s.first / s.second;
      lo = std::min(lo, mean);
      hi = std::max(hi, mean);
    }
    return hi - lo;
  };
  card.gap_var_linear = gap(lin_by_country);
  card.gap_var_nonlinear = gap(nl_by_country);
  return card;
}

}  // namespace stresslab::diagnostics
