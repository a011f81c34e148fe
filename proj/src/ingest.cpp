#include "stresslab/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "stresslab/csv.hpp"
#include "stresslab/error.hpp"

namespace stresslab::ingest {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw ParseError("line " + std::to_string(line) + ": not a number: '" + s + "'");
  }
  return v;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

// --- WEO ------------------------------------------------------------------------------

std::vector<CountryBaseline> weo_from_json(const Json& j) {
  if (!j.is_array()) throw ParseError("WEO baselines must be a JSON array");
  std::vector<CountryBaseline> out;
  for (const auto& e : j) {
    try {
      CountryBaseline b{e.at("country").get<std::string>(), e.at("gdp_growth").get<double>(),
                        e.at("inflation").get<double>(), e.at("interest_rate").get<double>(),
                        e.at("vintage").get<std::string>()};
      if (!std::isfinite(b.gdp_growth) || !std::isfinite(b.inflation) || !std::isfinite(b.interest_rate)) {
        throw ParseError("non-finite value");
      }
      if (b.vintage.empty()) throw ParseError("empty vintage");
      out.push_back(std::move(b));
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& ex) {
      throw ParseError(std::string("invalid WEO baseline entry: ") + ex.what());
    }
  }
  return out;
}

std::vector<CountryBaseline> load_weo(const std::filesystem::path& path) {
  try {
    return weo_from_json(Json::parse(read_text(path)));
  } catch (const Json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

Json to_json(const std::vector<CountryBaseline>& baselines) {
  Json arr = Json::array();
  for (const auto& b : baselines) {
    arr.push_back({{"country", b.country},
                   {"gdp_growth", b.gdp_growth},
                   {"inflation", b.inflation},
                   {"interest_rate", b.interest_rate},
                   {"vintage", b.vintage}});
  }
  return arr;
}

const CountryBaseline& find_baseline(const std::vector<CountryBaseline>& baselines, const std::string& country) {
  for (const auto& b : baselines) {
    if (b.country == country) return b;
  }
  throw MissingArtifactError("no WEO baseline for country '" + country + "'");
}

// --- prices ---------------------------------------------------------------------------

std::size_t PricePanel::ticker_index(const std::string& ticker) const {
  auto it = std::find(tickers.begin(), tickers.end(), ticker);
  if (it == tickers.end()) throw ConfigError("ticker not in price panel: " + ticker);
  return static_cast<std::size_t>(it - tickers.begin());
}

std::size_t PricePanel::history_days(const std::string& ticker) const {
  auto c = ticker_index(ticker);
  std::size_t n = 0;
  for (Eigen::Index r = 0; r < adj_close.rows(); ++r) n += std::isnan(adj_close(r, c)) ? 0 : 1;
  return n;
}

PricePanel parse_prices(std::string_view text) {
  auto rows = csv::parse(text);
  if (rows.empty() || rows[0].fields != std::vector<std::string>{"date", "ticker", "adj_close"}) {
    throw ParseError("price CSV must start with header 'date,ticker,adj_close'");
  }
  struct Obs {
    Date date;
    std::string ticker;
    double price;
  };
  std::vector<Obs> obs;
  obs.reserve(rows.size());
  std::set<std::pair<std::int32_t, std::string>> seen;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.fields.size() != 3) {
      throw ParseError("line " + std::to_string(r.line) + ": expected 3 fields");
    }
    Date d;
    try {
      d = Date::parse(r.fields[0]);
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(r.line) + ": " + e.what());
    }
    double p = parse_double(r.fields[2], r.line);
    if (!(p > 0.0) || !std::isfinite(p)) {
      throw ParseError("line " + std::to_string(r.line) + ": price must be positive");
    }
    if (!seen.emplace(d.days, r.fields[1]).second) {
      throw ParseError("line " + std::to_string(r.line) + ": duplicate (date,ticker) " + r.fields[0] + "," +
                       r.fields[1]);
    }
    obs.push_back({d, r.fields[1], p});
  }

  PricePanel panel;
  std::set<std::int32_t> date_set;
  std::set<std::string> ticker_set;
  for (const auto& o : obs) {
    date_set.insert(o.date.days);
    ticker_set.insert(o.ticker);
  }
  for (auto d : date_set) panel.dates.push_back(Date{d});
  panel.tickers.assign(ticker_set.begin(), ticker_set.end());
  panel.adj_close = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(panel.dates.size()),
                                              static_cast<Eigen::Index>(panel.tickers.size()), kNaN);
  for (const auto& o : obs) {
    auto r = std::lower_bound(panel.dates.begin(), panel.dates.end(), o.date) - panel.dates.begin();
    auto c = std::lower_bound(panel.tickers.begin(), panel.tickers.end(), o.ticker) - panel.tickers.begin();
    panel.adj_close(r, c) = o.price;
  }
  // Gaps inside a ticker's active range are rejected rather than filled.
  for (Eigen::Index c = 0; c < panel.adj_close.cols(); ++c) {
    Eigen::Index first = -1, last = -1;
    for (Eigen::Index r = 0; r < panel.adj_close.rows(); ++r) {
      if (!std::isnan(panel.adj_close(r, c))) {
        if (first < 0) first = r;
        last = r;
      }
    }
    for (Eigen::Index r = first; r <= last; ++r) {
      if (std::isnan(panel.adj_close(r, c))) {
        throw ParseError("ticker " + panel.tickers[c] + " has a missing price on " +
                         panel.dates[r].to_string() + " inside its active range");
      }
    }
  }
  return panel;
}

PricePanel load_prices(const std::filesystem::path& path) { return parse_prices(read_text(path)); }

std::string prices_to_csv(const PricePanel& panel) {
  std::string out = "date,ticker,adj_close\n";
  char buf[64];
  for (std::size_t r = 0; r < panel.dates.size(); ++r) {
    const auto ds = panel.dates[r].to_string();
    for (std::size_t c = 0; c < panel.tickers.size(); ++c) {
      double p = panel.adj_close(r, c);
      if (std::isnan(p)) continue;
      std::snprintf(buf, sizeof buf, "%.6f", p);
      out += ds;
      out += ',';
      out += panel.tickers[c];
      out += ',';
      out += buf;
      out += '\n';
    }
  }
  return out;
}

ReturnPanel log_returns(const PricePanel& p) {
  if (p.dates.size() < 2) throw ConfigError("log_returns needs at least two dates");
  ReturnPanel out;
  out.dates.assign(p.dates.begin() + 1, p.dates.end());
  out.tickers = p.tickers;
  const auto n = p.adj_close.rows() - 1;
  out.values.resize(n, p.adj_close.cols());
  for (Eigen::Index c = 0; c < p.adj_close.cols(); ++c) {
    for (Eigen::Index r = 0; r < n; ++r) {
      double a = p.adj_close(r, c), b = p.adj_close(r + 1, c);
      if (std::isnan(a) || std::isnan(b)) {
        out.values(r, c) = kNaN;
        continue;
      }
      if (!(a > 0.0) || !(b > 0.0)) throw ParseError("nonpositive price for " + p.tickers[c]);
      out.values(r, c) = std::log(b / a);
    }
  }
  return out;
}

std::vector<Date> ReturnPanel::window_dates(const DateRange& range) const {
  std::vector<Date> out;
  for (auto d : dates) {
    if (range.contains(d)) out.push_back(d);
  }
  return out;
}

Eigen::MatrixXd ReturnPanel::window(const DateRange& range, const std::vector<std::string>& wanted,
                                    bool allow_missing) const {
  std::vector<Eigen::Index> cols;
  for (const auto& t : wanted) {
    auto it = std::find(tickers.begin(), tickers.end(), t);
    if (it == tickers.end()) throw ConfigError("ticker not in return panel: " + t);
    cols.push_back(it - tickers.begin());
  }
  std::vector<Eigen::Index> rows;
  for (std::size_t r = 0; r < dates.size(); ++r) {
    if (range.contains(dates[r])) rows.push_back(static_cast<Eigen::Index>(r));
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      double v = values(rows[i], cols[j]);
      if (std::isnan(v) && !allow_missing) {
        throw ConfigError("ticker " + wanted[j] + " has no data on " + dates[rows[i]].to_string() +
                          " inside window " + range.start.to_string() + ".." + range.end.to_string());
      }
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return out;
}

// --- headlines ------------------------------------------------------------------------

std::size_t HeadlineSnapshot::real_count() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const Headline& h) { return !h.is_pad; }));
}

HeadlineSnapshot build_headline_snapshot(const std::string& country, std::vector<RawHeadline> raw,
                                         std::int64_t window_start, std::int64_t window_end,
                                         const std::string& query, int attempts) {
  std::sort(raw.begin(), raw.end(), [](const RawHeadline& a, const RawHeadline& b) {
    return std::tie(a.published_at, a.title) < std::tie(b.published_at, b.title);
  });
  HeadlineSnapshot snap{country, {}, window_start, window_end, query, attempts};
  std::set<std::string> titles;
  for (auto& h : raw) {
    if (snap.rows.size() == kSnapshotRows) break;
    if (!titles.insert(h.title).second) continue;
    snap.rows.push_back({h.published_at, std::move(h.title), false});
  }
  for (int pad = 1; snap.rows.size() < kSnapshotRows; ++pad) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "[PAD-%02d] No headline available", pad);
    snap.rows.push_back({0, buf, true});
  }
  return snap;
}

std::string country_slug(const std::string& country) {
  std::string out;
  for (char c : country) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!out.empty() && out.back() != '_') {
      out.push_back('_');
    }
  }
  return out;
}

std::filesystem::path write_headline_snapshot(const HeadlineSnapshot& snap, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto stem = country_slug(snap.country);
  const auto csv_path = dir / (stem + "_headlines.csv");
  {
    std::ofstream out(csv_path, std::ios::binary);
    out << "published_at,title,is_pad\n";
    for (const auto& h : snap.rows) {
      out << (h.is_pad ? std::string() : format_utc_ms(h.published_at)) << ',' << csv::escape(h.title) << ','
          << (h.is_pad ? 1 : 0) << '\n';
    }
  }
  Json side{{"country", snap.country},
            {"window_start", format_utc_ms(snap.window_start)},
            {"window_end", format_utc_ms(snap.window_end)},
            {"query", snap.query},
            {"attempts", snap.attempts}};
  std::ofstream(dir / (stem + "_headlines.json"), std::ios::binary) << side.dump(2) << '\n';
  return csv_path;
}

HeadlineSnapshot read_headline_snapshot(const std::filesystem::path& csv_path) {
  auto rows = csv::read_file(csv_path);
  if (rows.empty() || rows[0].fields != std::vector<std::string>{"published_at", "title", "is_pad"}) {
    throw ParseError(csv_path.string() + ": expected header 'published_at,title,is_pad'");
  }
  HeadlineSnapshot snap;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i].fields;
    if (f.size() != 3) throw ParseError(csv_path.string() + ": line " + std::to_string(rows[i].line));
    Headline h;
    h.is_pad = f[2] == "1";
    h.title = f[1];
    h.published_at = h.is_pad || f[0].empty() ? 0 : parse_utc_ms(f[0]);
    snap.rows.push_back(std::move(h));
  }
  if (snap.rows.size() != kSnapshotRows) {
    throw ParseError(csv_path.string() + ": headline snapshot must have exactly 50 rows");
  }
  auto sidecar = csv_path;
  sidecar.replace_extension(".json");
  std::ifstream in(sidecar);
  if (!in) throw MissingArtifactError("missing headline sidecar " + sidecar.string());
  Json side = Json::parse(in);
  snap.country = side.at("country").get<std::string>();
  snap.window_start = parse_utc_ms(side.at("window_start").get<std::string>());
  snap.window_end = parse_utc_ms(side.at("window_end").get<std::string>());
  snap.query = side.at("query").get<std::string>();
  snap.attempts = side.at("attempts").get<int>();
  return snap;
}

}  // namespace stresslab::ingest
