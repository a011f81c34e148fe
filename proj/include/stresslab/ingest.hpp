#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stresslab/core.hpp"
#include "stresslab/dates.hpp"

namespace stresslab::ingest {

struct CountryBaseline {
  std::string country;
  double gdp_growth = 0.0;     // % y/y
  double inflation = 0.0;      // % y/y
  double interest_rate = 0.0;  // % level
  std::string vintage;         // e.g. "WEO-2025-04"
  bool operator==(const CountryBaseline&) const = default;
};

/// Reads a JSON array of baselines. Throws ParseError on missing/invalid fields.
std::vector<CountryBaseline> load_weo(const std::filesystem::path& path);
std::vector<CountryBaseline> weo_from_json(const Json& j);
Json to_json(const std::vector<CountryBaseline>& baselines);
const CountryBaseline& find_baseline(const std::vector<CountryBaseline>& baselines, const std::string& country);

/// Daily adjusted closes. Cells outside a ticker's active range are NaN; inside the
/// range every cell is a positive price.
struct PricePanel {
  std::vector<Date> dates;
  std::vector<std::string> tickers;
  Eigen::MatrixXd adj_close;  // dates x tickers

  std::size_t ticker_index(const std::string& ticker) const;  // throws ConfigError
  /// Number of dates on which the ticker has a price.
  std::size_t history_days(const std::string& ticker) const;
};

/// CSV `date,ticker,adj_close` (header required, rows in any order).
PricePanel load_prices(const std::filesystem::path& path);
PricePanel parse_prices(std::string_view csv_text);
std::string prices_to_csv(const PricePanel& panel);

/// Log returns aligned to dates[1..]; NaN where either endpoint is outside the active range.
struct ReturnPanel {
  std::vector<Date> dates;
  std::vector<std::string> tickers;
  Eigen::MatrixXd values;  // (dates-1) x tickers

  /// Rows whose date lies in `range`, restricted to `tickers` (in that order).
  /// Throws ConfigError if a requested ticker has missing data inside the window, unless
  /// allow_missing is set (missing cells are then NaN).
  Eigen::MatrixXd window(const DateRange& range, const std::vector<std::string>& tickers,
                         bool allow_missing = false) const;
  std::vector<Date> window_dates(const DateRange& range) const;
};

ReturnPanel log_returns(const PricePanel& panel);

// --- headlines ------------------------------------------------------------------------

inline constexpr std::size_t kSnapshotRows = 50;

struct Headline {
  std::int64_t published_at = 0;  // UTC epoch ms; 0 for pad rows
  std::string title;
  bool is_pad = false;
  bool operator==(const Headline&) const = default;
};

struct RawHeadline {
  std::int64_t published_at = 0;
  std::string title;
};

struct HeadlineSnapshot {
  std::string country;
  std::vector<Headline> rows;  // always kSnapshotRows
  std::int64_t window_start = 0;
  std::int64_t window_end = 0;
  std::string query;
  int attempts = 1;

  std::size_t real_count() const;
  bool operator==(const HeadlineSnapshot&) const = default;
};

/// Sort by (published_at, title), dedup on title keeping the first, truncate to 50, then
/// pad with "[PAD-XX] No headline available" rows numbered from 01.
HeadlineSnapshot build_headline_snapshot(const std::string& country, std::vector<RawHeadline> raw,
                                         std::int64_t window_start, std::int64_t window_end,
                                         const std::string& query, int attempts = 1);

/// Writes `<stem>_headlines.csv` and `<stem>_headlines.json` under `dir`; returns the CSV path.
std::filesystem::path write_headline_snapshot(const HeadlineSnapshot& snap, const std::filesystem::path& dir);
HeadlineSnapshot read_headline_snapshot(const std::filesystem::path& csv_path);
/// File stem used for a country ("United Kingdom" -> "united_kingdom").
std::string country_slug(const std::string& country);

}  // namespace stresslab::ingest
