#include "stresslab/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "stresslab/dates.hpp"
#include "stresslab/error.hpp"
#include "stresslab/rng.hpp"

namespace stresslab::synthetic {

namespace {

struct AssetSpec {
  const char* ticker;
  double beta_mkt;
  double beta_rates;
  double beta_gold;
  double idio;  // daily idiosyncratic vol in calm regime
  double drift;
};

constexpr AssetSpec kAssets[] = {
    {"SPY", 1.00, 0.00, 0.00, 0.0015, 0.00030},  {"IEF", -0.08, 1.00, 0.00, 0.0006, 0.00012},
    {"GLD", 0.05, 0.15, 1.00, 0.0020, 0.00025},  {"XLE", 1.10, 0.00, 0.20, 0.0090, 0.00020},
    {"XLF", 1.30, -0.30, 0.00, 0.0060, 0.00020}, {"XLK", 1.15, 0.10, 0.00, 0.0060, 0.00040},
    {"XLY", 1.10, 0.00, 0.00, 0.0050, 0.00030},  {"XLI", 1.05, 0.00, 0.00, 0.0045, 0.00030},
    {"XLU", 0.60, 0.40, 0.00, 0.0060, 0.00020},  {"XLV", 0.70, 0.10, 0.00, 0.0050, 0.00030},
    {"XLP", 0.55, 0.20, 0.00, 0.0045, 0.00025},  {"XLB", 1.00, 0.00, 0.10, 0.0060, 0.00025},
    {"XLRE", 0.90, 0.50, 0.00, 0.0070, 0.00020},
};

enum Regime { calm = 0, stress = 1, crisis = 2 };

bool in(const Date& d, int y0, int m0, int d0, int y1, int m1, int d1) {
  return d >= Date::from_ymd(y0, m0, d0) && d <= Date::from_ymd(y1, m1, d1);
}

}  // namespace

ingest::PricePanel generate_prices(std::uint64_t seed) {
  std::vector<Date> dates;
  for (Date d = Date::from_ymd(2000, 1, 3); d <= Date::from_ymd(2025, 12, 31); d = d + 1) {
    if (d.weekday() < 5) dates.push_back(d);
  }
  const auto T = static_cast<Eigen::Index>(dates.size());
  constexpr Eigen::Index N = std::size(kAssets);

  CounterRng rng(combine_keys(seed, 0x707269636573ULL), 0);
  // Regime path: Markov chain outside the pinned episodes.
  const double stay[3] = {0.995, 0.97, 0.95};
  Regime reg = calm;
  ingest::PricePanel p;
  p.dates = dates;
  std::vector<std::pair<std::string, Eigen::Index>> order;
  for (Eigen::Index i = 0; i < N; ++i) order.emplace_back(kAssets[i].ticker, i);
  std::sort(order.begin(), order.end());
  for (const auto& [t, i] : order) p.tickers.push_back(t);
  p.adj_close = Eigen::MatrixXd::Constant(T, N, std::nan(""));

  Eigen::VectorXd logp = Eigen::VectorXd::Constant(N, std::log(100.0));
  const Date xlre_start = Date::from_ymd(2015, 10, 8);
  for (Eigen::Index t = 0; t < T; ++t) {
    const Date d = dates[static_cast<std::size_t>(t)];
    double crash = 0.0;
    if (in(d, 2008, 9, 15, 2009, 3, 9)) {
      reg = crisis;
      crash = -0.0040;
    } else if (in(d, 2020, 2, 20, 2020, 3, 23)) {
      reg = crisis;
      crash = -0.0110;
    } else if (in(d, 2020, 3, 24, 2020, 4, 30)) {
      reg = stress;
      crash = 0.0040;
    } else if (in(d, 2012, 1, 1, 2019, 12, 31)) {
      reg = rng.uniform() < 0.01 ? stress : calm;
    } else if (rng.uniform() > stay[reg]) {
      reg = reg == calm ? stress : (rng.uniform() < 0.8 ? calm : stress);
    }
    const double vol_mult[3] = {1.0, 1.8, 3.5};
    const double m = crash + 0.0070 * vol_mult[reg] * rng.normal();
    const double r = (reg == crisis ? 0.0004 : 0.0) + 0.0035 * std::sqrt(vol_mult[reg]) * rng.normal();
    const double g = (reg == crisis ? 0.0003 : 0.0) + 0.0090 * std::sqrt(vol_mult[reg]) * rng.normal();
    for (Eigen::Index i = 0; i < N; ++i) {
      const auto& a = kAssets[i];
      const double e = a.idio * vol_mult[reg] * rng.normal();
      logp(i) += a.drift + a.beta_mkt * m + a.beta_rates * r + a.beta_gold * g + e;
    }
    for (std::size_t k = 0; k < order.size(); ++k) {
      const Eigen::Index i = order[k].second;
      if (std::string(kAssets[i].ticker) == "XLRE" && d < xlre_start) continue;
      p.adj_close(t, static_cast<Eigen::Index>(k)) = std::exp(logp(i));
    }
  }
  return p;
}

std::vector<ingest::CountryBaseline> generate_weo() {
  return {
      {"Canada", 1.4, 2.0, 4.25, "WEO-2025-04"},         {"France", 0.6, 1.3, 2.15, "WEO-2025-04"},
      {"Germany", 0.0, 2.1, 2.15, "WEO-2025-04"},        {"Italy", 0.4, 1.7, 2.15, "WEO-2025-04"},
      {"Japan", 0.6, 2.4, 0.50, "WEO-2025-04"},          {"United Kingdom", 1.1, 3.1, 4.50, "WEO-2025-04"},
      {"United States", 1.8, 3.0, 4.40, "WEO-2025-04"},
  };
}

namespace {

constexpr const char* kSubjects[] = {"central bank", "finance ministry", "manufacturing output", "retail sales",
                                     "housing market", "bond yields", "bank lending", "export orders",
                                     "consumer confidence", "energy prices", "labour market", "stock market"};
constexpr const char* kMoves[] = {"slows sharply", "rebounds unexpectedly", "weakens further", "holds steady",
                                  "surges", "falls to multi-year low", "faces mounting pressure", "beats forecasts",
                                  "stalls amid uncertainty", "tightens"};
constexpr const char* kTails[] = {"as tariffs bite", "ahead of rate decision", "on weaker demand", "after policy shift",
                                  "amid inflation worries", "as recession fears grow", "despite stimulus hopes",
                                  "as credit conditions tighten", "on energy costs", "analysts say"};

}  // namespace

std::map<std::string, std::vector<ingest::RawHeadline>> generate_headlines(const std::vector<std::string>& countries,
                                                                          std::uint64_t seed) {
  std::map<std::string, std::vector<ingest::RawHeadline>> out;
  const std::int64_t start = parse_utc_ms("2025-09-01T00:00:00Z");
  const std::int64_t span = parse_utc_ms("2025-09-30T23:59:59Z") - start;
  for (const auto& c : countries) {
    CounterRng rng(combine_keys(seed, key_from_string(c)), 0x6865616473ULL);
    const auto n = 30 + rng.below(51);
    auto& v = out[c];
    for (std::uint64_t i = 0; i < n; ++i) {
      ingest::RawHeadline h;
      h.published_at = start + static_cast<std::int64_t>(rng.uniform() * static_cast<double>(span)) / 1000 * 1000;
      const auto subject = rng.below(std::size(kSubjects));
      const auto move = rng.below(std::size(kMoves));
      const auto tail = rng.below(std::size(kTails));
      h.title = c + " " + kSubjects[subject] + " " + kMoves[move] + " " + kTails[tail];
      v.push_back(std::move(h));
      if (rng.uniform() < 0.08) v.push_back(v.back());  // syndicated duplicate
    }
  }
  return out;
}

Json headlines_to_json(const std::map<std::string, std::vector<ingest::RawHeadline>>& h) {
  Json j = Json::object();
  for (const auto& [c, rows] : h) {
    Json arr = Json::array();
    for (const auto& r : rows) arr.push_back(Json{{"published_at", format_utc_ms(r.published_at)}, {"title", r.title}});
    j[c] = std::move(arr);
  }
  return j;
}

std::map<std::string, std::vector<ingest::RawHeadline>> headlines_from_json(const Json& j) {
  std::map<std::string, std::vector<ingest::RawHeadline>> out;
  try {
    for (const auto& [c, arr] : j.items()) {
      auto& v = out[c];
      for (const auto& r : arr) {
        v.push_back({parse_utc_ms(r.at("published_at").get<std::string>()), r.at("title").get<std::string>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("raw headlines: ") + e.what());
  }
  return out;
}

}  // namespace stresslab::synthetic
