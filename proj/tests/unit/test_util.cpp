#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <fstream>
#include <set>

#include "stresslab/csv.hpp"
#include "stresslab/dates.hpp"
#include "stresslab/error.hpp"
#include "stresslab/hash.hpp"
#include "stresslab/parallel.hpp"
#include "stresslab/rng.hpp"
#include "support.hpp"

using namespace stresslab;

TEST(Sha256, KnownDigests) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Sha256, IncrementalMatchesOneShot) {
  Sha256 h;
  h.update("ab");
  h.update("c");
  EXPECT_EQ(to_hex(h.finish()), sha256_hex("abc"));
}

TEST(Sha256, FileMissingThrows) {
  EXPECT_THROW(sha256_file_hex("/nonexistent/file.bin"), MissingArtifactError);
}

TEST(Philox, Random123KnownAnswers) {
  auto a = philox4x32({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(a, (std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  auto b = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(b, (std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  auto c = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(c, (std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(CounterRng, StreamsAreReproducibleAndDistinct) {
  CounterRng a(7, 3), b(7, 3), c(7, 4);
  for (int i = 0; i < 100; ++i) {
    double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    EXPECT_NE(x, c.uniform());
    EXPECT_GT(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
}

TEST(CounterRng, NormalMoments) {
  CounterRng r(11, 0);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    double z = r.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(CounterRng, StudentTVarianceMatchesDof) {
  CounterRng r(5, 1);
  const int n = 400000;
  double s2 = 0;
  for (int i = 0; i < n; ++i) {
    double t = r.student_t(8.0);
    s2 += t * t;
  }
  EXPECT_NEAR(s2 / n, 8.0 / 6.0, 0.05);
}

TEST(CounterRng, BelowStaysInRange) {
  CounterRng r(1, 2);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    auto k = r.below(7);
    ASSERT_LT(k, 7u);
    seen.insert(k);
  }
  EXPECT_EQ(seen.size(), 7u);
}

TEST(Keys, StringKeyDependsOnEveryByte) {
  EXPECT_EQ(key_from_string("abc"), key_from_string("abc"));
  EXPECT_NE(key_from_string("abc"), key_from_string("abd"));
  EXPECT_NE(combine_keys(1, 2), combine_keys(2, 1));
}

TEST(Dates, RoundTripAndWeekday) {
  Date d = Date::parse("2015-10-08");
  EXPECT_EQ(d.to_string(), "2015-10-08");
  EXPECT_EQ(d, Date::from_ymd(2015, 10, 8));
  EXPECT_EQ(Date::from_ymd(1970, 1, 1).days, 0);
  EXPECT_EQ(Date::from_ymd(2024, 2, 29) + 1, Date::from_ymd(2024, 3, 1));
  EXPECT_EQ(Date::from_ymd(2025, 9, 30).weekday(), 1);  // Tuesday
  EXPECT_THROW(Date::parse("2015-13-01"), ParseError);
  EXPECT_THROW(Date::parse("20151001"), ParseError);
}

TEST(Dates, UtcMillis) {
  EXPECT_EQ(format_utc_ms(0), "1970-01-01T00:00:00Z");
  EXPECT_EQ(parse_utc_ms("2025-11-14T17:36:18Z"), 1763141778000);
  EXPECT_EQ(parse_utc_ms("2025-11-14T17:36:18.000Z"), 1763141778000);
  EXPECT_EQ(format_utc_ms(1763141778000), "2025-11-14T17:36:18Z");
  EXPECT_EQ(format_utc_ms(1763141778042), "2025-11-14T17:36:18.042Z");
  EXPECT_EQ(parse_utc_ms(format_utc_ms(-1)), -1);
  EXPECT_THROW(parse_utc_ms("yesterday"), ParseError);
}

TEST(Csv, ParsesQuotedFieldsAndKeepsHeader) {
  auto rows = csv::parse("a,b\n\"x, y\",\"he said \"\"hi\"\"\"\r\n\n3,\n");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].fields, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(rows[1].fields, (std::vector<std::string>{"x, y", "he said \"hi\""}));
  EXPECT_EQ(rows[2].fields, (std::vector<std::string>{"3", ""}));
  EXPECT_EQ(rows[2].line, 4u);
  EXPECT_THROW(csv::parse("\"open\n"), ParseError);
}

TEST(Csv, EscapeRoundTrips) {
  std::vector<std::string> f{"plain", "with,comma", "quote\"d", " padded"};
  auto rows = csv::parse(csv::join(f));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].fields, f);
  EXPECT_EQ(csv::num(0.1), "0.1");
}

TEST(Parallel, CoversEveryIndexOnceAndRethrows) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                 if (i == 3) throw ConfigError("boom");
               }),
               ConfigError);
}
