#include "stresslab/dates.hpp"

#include <charconv>
#include <cstdio>

#include "stresslab/error.hpp"

namespace stresslab {

// Howard Hinnant's days_from_civil / civil_from_days.
Date Date::from_ymd(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return Date{era * 146097 + static_cast<int>(doe) - 719468};
}

Date Date::parse(std::string_view s) {
  auto fail = [&] { return ParseError("invalid ISO date: '" + std::string(s) + "'"); };
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') throw fail();
  int y = 0;
  unsigned m = 0, d = 0;
  auto num = [&](std::string_view part, auto& out) {
    auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
    if (ec != std::errc{} || p != part.data() + part.size()) throw fail();
  };
  num(s.substr(0, 4), y);
  num(s.substr(5, 2), m);
  num(s.substr(8, 2), d);
  if (m < 1 || m > 12 || d < 1 || d > 31) throw fail();
  Date out = from_ymd(y, m, d);
  if (out.to_string() != s) throw fail();  // rejects 2021-02-30
  return out;
}

std::string Date::to_string() const {
  int z = days + 719468;
  const int era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  int y = static_cast<int>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", y, m, d);
  return buf;
}

int Date::weekday() const {
  // 1970-01-01 was a Thursday.
  int w = (days + 3) % 7;
  return w < 0 ? w + 7 : w;
}

}  // namespace stresslab

namespace stresslab {

std::string format_utc_ms(std::int64_t epoch_ms) {
  std::int64_t secs = epoch_ms >= 0 ? epoch_ms / 1000 : -((-epoch_ms + 999) / 1000);
  std::int64_t day = secs >= 0 ? secs / 86400 : -((-secs + 86399) / 86400);
  std::int64_t rem = secs - day * 86400;
  Date d{static_cast<std::int32_t>(day)};
  const auto ms = static_cast<int>(epoch_ms - secs * 1000);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02d", d.to_string().c_str(), static_cast<int>(rem / 3600),
                static_cast<int>(rem / 60 % 60), static_cast<int>(rem % 60));
  std::string out = buf;
  if (ms != 0) {
    std::snprintf(buf, sizeof buf, ".%03d", ms);
    out += buf;
  }
  return out + "Z";
}

std::int64_t parse_utc_ms(std::string_view s) {
  auto fail = [&] { return ParseError("invalid UTC timestamp: '" + std::string(s) + "'"); };
  if (s.size() < 20 || s[10] != 'T' || s.back() != 'Z' || s[13] != ':' || s[16] != ':') throw fail();
  Date d = Date::parse(s.substr(0, 10));
  auto two = [&](std::size_t pos) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + 2, v);
    if (ec != std::errc{} || p != s.data() + pos + 2) throw fail();
    return v;
  };
  int hh = two(11), mm = two(14), ss = two(17);
  if (hh > 23 || mm > 59 || ss > 60) throw fail();
  std::int64_t ms = 0;
  if (s.size() == 24 && s[19] == '.') {
    int frac = 0;
    auto [p, ec] = std::from_chars(s.data() + 20, s.data() + 23, frac);
    if (ec != std::errc{} || p != s.data() + 23) throw fail();
    ms = frac;
  } else if (s.size() != 20) {
    throw fail();
  }
  return (static_cast<std::int64_t>(d.days) * 86400 + hh * 3600 + mm * 60 + ss) * 1000 + ms;
}

}  // namespace stresslab
