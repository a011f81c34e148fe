#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "stresslab/error.hpp"
#include "stresslab/ingest.hpp"
#include "stresslab/synthetic.hpp"
#include "support.hpp"

using namespace stresslab;
using namespace stresslab::ingest;

TEST(Prices, MinimalLoad) {
  auto p = parse_prices("date,ticker,adj_close\n2024-01-02,SPY,100\n2024-01-03,SPY,101\n2024-01-04,SPY,99.5\n");
  EXPECT_EQ(p.dates.size(), 3u);
  EXPECT_EQ(p.tickers, std::vector<std::string>{"SPY"});
  EXPECT_EQ(p.adj_close(2, 0), 99.5);
}

TEST(Prices, DuplicateKeyRejected) {
  try {
    parse_prices("date,ticker,adj_close\n2024-01-02,SPY,100\n2024-01-02,SPY,101\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
  }
}

TEST(Prices, BadRowNamesLine) {
  try {
    parse_prices("date,ticker,adj_close\n2024-01-02,SPY,100\n2024-01-03,SPY,abc\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  EXPECT_THROW(parse_prices("d,t,p\n"), ParseError);
  EXPECT_THROW(parse_prices("date,ticker,adj_close\n2024-01-02,SPY,-1\n"), ParseError);
}

TEST(Prices, ShuffledRowsGiveSamePanel) {
  const std::string a =
      "date,ticker,adj_close\n2024-01-02,SPY,100\n2024-01-02,GLD,50\n2024-01-03,SPY,101\n2024-01-03,GLD,51\n";
  const std::string b =
      "date,ticker,adj_close\n2024-01-03,GLD,51\n2024-01-02,SPY,100\n2024-01-03,SPY,101\n2024-01-02,GLD,50\n";
  auto pa = parse_prices(a), pb = parse_prices(b);
  EXPECT_EQ(pa.dates, pb.dates);
  EXPECT_EQ(pa.tickers, pb.tickers);
  EXPECT_EQ(pa.adj_close, pb.adj_close);
  EXPECT_EQ(prices_to_csv(pa), prices_to_csv(pb));
}

TEST(Prices, GapInsideActiveRangeRejected) {
  EXPECT_THROW(parse_prices("date,ticker,adj_close\n2024-01-02,SPY,100\n2024-01-02,GLD,50\n"
                            "2024-01-03,SPY,101\n2024-01-04,SPY,102\n2024-01-04,GLD,52\n"),
               ParseError);
}

TEST(Prices, LateStartIsNaNBeforeFirstPrice) {
  auto p = parse_prices("date,ticker,adj_close\n2024-01-02,SPY,100\n2024-01-03,SPY,101\n2024-01-03,XLRE,20\n");
  EXPECT_TRUE(std::isnan(p.adj_close(0, p.ticker_index("XLRE"))));
  EXPECT_EQ(p.history_days("XLRE"), 1u);
  EXPECT_EQ(p.history_days("SPY"), 2u);
  EXPECT_THROW(p.ticker_index("QQQ"), ConfigError);
}

TEST(LogReturns, HandOracle) {
  auto flat = log_returns(parse_prices("date,ticker,adj_close\n2024-01-02,A,100\n2024-01-03,A,100\n"));
  EXPECT_EQ(flat.values(0, 0), 0.0);
  auto up = log_returns(parse_prices("date,ticker,adj_close\n2024-01-02,A,100\n2024-01-03,A,110\n"));
  EXPECT_NEAR(up.values(0, 0), 0.09531017980432493, 1e-15);
  EXPECT_EQ(up.dates.size(), 1u);
  EXPECT_EQ(up.dates[0], Date::from_ymd(2024, 1, 3));
}

TEST(LogReturns, ScaleInvariant) {
  auto p = synthetic::generate_prices(3);
  auto q = p;
  q.adj_close *= 7.0;
  auto a = log_returns(p), b = log_returns(q);
  for (Eigen::Index i = 0; i < a.values.rows(); i += 97)
    for (Eigen::Index j = 0; j < a.values.cols(); ++j) {
      if (std::isnan(a.values(i, j))) {
        EXPECT_TRUE(std::isnan(b.values(i, j)));
      } else {
        EXPECT_NEAR(a.values(i, j), b.values(i, j), 1e-14);
      }
    }
}

TEST(LogReturns, NonPositivePriceRejected) {
  auto p = parse_prices("date,ticker,adj_close\n2024-01-02,A,100\n2024-01-03,A,110\n");
  p.adj_close(1, 0) = 0.0;
  EXPECT_THROW(log_returns(p), ParseError);
}

TEST(ReturnWindow, MissingDataPolicy) {
  auto r = log_returns(synthetic::generate_prices(1));
  DateRange early{Date::from_ymd(2010, 1, 1), Date::from_ymd(2010, 12, 31)};
  EXPECT_THROW(r.window(early, {"SPY", "XLRE"}), ConfigError);
  auto w = r.window(early, {"SPY", "XLRE"}, true);
  EXPECT_FALSE(std::isnan(w(0, 0)));
  EXPECT_TRUE(std::isnan(w(0, 1)));
}

TEST(Weo, ParsesAndValidates) {
  auto b = weo_from_json(to_json(synthetic::generate_weo()));
  EXPECT_EQ(b.size(), 7u);
  EXPECT_EQ(find_baseline(b, "Canada").interest_rate, 4.25);
  EXPECT_THROW(find_baseline(b, "Atlantis"), MissingArtifactError);
  EXPECT_THROW(weo_from_json(Json::parse(R"([{"country":"X","gdp_growth":1,"inflation":2,"interest_rate":3,"vintage":""}])")),
               ParseError);
  EXPECT_THROW(weo_from_json(Json::parse(R"([{"country":"X","gdp_growth":"1"}])")), ParseError);
}

namespace {

std::vector<RawHeadline> random_headlines(std::mt19937_64& g, int n, int distinct_titles) {
  std::uniform_int_distribution<int> title(0, distinct_titles - 1);
  std::uniform_int_distribution<std::int64_t> ts(1756684800000, 1759276800000);
  std::vector<RawHeadline> out;
  for (int i = 0; i < n; ++i) out.push_back({ts(g), "Headline " + std::to_string(title(g))});
  return out;
}

// Independent construction: stable sort, keep first title, truncate.
std::vector<RawHeadline> oracle_prefix(std::vector<RawHeadline> raw) {
  std::stable_sort(raw.begin(), raw.end(), [](const RawHeadline& a, const RawHeadline& b) {
    return std::tie(a.published_at, a.title) < std::tie(b.published_at, b.title);
  });
  std::set<std::string> seen;
  std::vector<RawHeadline> out;
  for (const auto& h : raw) {
    if (seen.insert(h.title).second) out.push_back(h);
  }
  if (out.size() > kSnapshotRows) out.resize(kSnapshotRows);
  return out;
}

}  // namespace

TEST(HeadlineSnapshot, EmptyInputIsAllPad) {
  auto s = build_headline_snapshot("Japan", {}, 0, 1, "q");
  ASSERT_EQ(s.rows.size(), 50u);
  EXPECT_EQ(s.real_count(), 0u);
  EXPECT_EQ(s.rows[0].title, "[PAD-01] No headline available");
  EXPECT_EQ(s.rows[49].title, "[PAD-50] No headline available");
}

TEST(HeadlineSnapshot, TruncatesDedupedSortedList) {
  std::mt19937_64 g(9);
  auto raw = random_headlines(g, 110, 1000);
  for (int i = 0; i < 10; ++i) raw.push_back({raw[i].published_at + 5, raw[i].title});  // 10 duplicate titles
  auto s = build_headline_snapshot("Italy", raw, 0, 1, "q");
  auto expect = oracle_prefix(raw);
  ASSERT_EQ(s.real_count(), 50u);
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_EQ(s.rows[i].title, expect[i].title);
    EXPECT_EQ(s.rows[i].published_at, expect[i].published_at);
    EXPECT_FALSE(s.rows[i].is_pad);
  }
}

TEST(HeadlineSnapshot, PartialInputIsPaddedInOrder) {
  std::vector<RawHeadline> raw;
  for (int i = 0; i < 37; ++i) raw.push_back({1000 + i, "Story " + std::to_string(i)});
  auto s = build_headline_snapshot("France", raw, 0, 1, "q", 2);
  EXPECT_EQ(s.real_count(), 37u);
  for (int k = 0; k < 13; ++k) {
    const auto& row = s.rows[37 + k];
    EXPECT_TRUE(row.is_pad);
    char buf[40];
    std::snprintf(buf, sizeof buf, "[PAD-%02d] No headline available", k + 1);
    EXPECT_EQ(row.title, buf);
  }
  EXPECT_EQ(s.attempts, 2);
}

TEST(HeadlineSnapshot, AlwaysFiftyRowsOverRandomInputs) {
  std::mt19937_64 g(2024);
  std::uniform_int_distribution<int> n(0, 150), d(1, 200);
  for (int trial = 0; trial < 300; ++trial) {
    auto raw = random_headlines(g, n(g), d(g));
    auto s = build_headline_snapshot("X", raw, 0, 1, "q");
    ASSERT_EQ(s.rows.size(), 50u);
    auto expect = oracle_prefix(raw);
    ASSERT_EQ(s.real_count(), expect.size());
    std::set<std::string> titles;
    for (std::size_t i = 0; i < s.real_count(); ++i) {
      ASSERT_TRUE(titles.insert(s.rows[i].title).second);
      if (i > 0) {
        ASSERT_LE(std::tie(s.rows[i - 1].published_at, s.rows[i - 1].title),
                  std::tie(s.rows[i].published_at, s.rows[i].title));
      }
    }
    for (std::size_t i = s.real_count(); i < 50; ++i) ASSERT_EQ(s.rows[i].title.rfind("[PAD-", 0), 0u);
  }
}

TEST(HeadlineSnapshot, FileRoundTrip) {
  testsupport::TempDir tmp("headlines");
  std::vector<RawHeadline> raw{{5, "Rates, again"}, {3, "Quote \"inside\""}, {4, "Plain"}};
  auto s = build_headline_snapshot("United Kingdom", raw, 1, 9, "uk economy");
  auto csv_path = write_headline_snapshot(s, tmp.path());
  EXPECT_EQ(csv_path.filename(), "united_kingdom_headlines.csv");
  EXPECT_TRUE(std::filesystem::exists(tmp.path() / "united_kingdom_headlines.json"));
  EXPECT_EQ(read_headline_snapshot(csv_path), s);
}
