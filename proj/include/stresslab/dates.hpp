#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace stresslab {

/// Calendar date stored as days since 1970-01-01.
struct Date {
  std::int32_t days = 0;

  static Date from_ymd(int year, unsigned month, unsigned day);
  /// Parses "YYYY-MM-DD". Throws ParseError.
  static Date parse(std::string_view iso);

  std::string to_string() const;
  int weekday() const;  // 0 = Monday
  Date operator+(int n) const { return Date{days + n}; }

  auto operator<=>(const Date&) const = default;
};

/// Inclusive date range.
struct DateRange {
  Date start;
  Date end;

  bool contains(Date d) const { return start <= d && d <= end; }
  bool operator==(const DateRange&) const = default;
};

}  // namespace stresslab

namespace stresslab {

/// "YYYY-MM-DDTHH:MM:SSZ" for UTC epoch milliseconds, with ".mmm" before the Z when the
/// sub-second part is nonzero.
std::string format_utc_ms(std::int64_t epoch_ms);
/// Accepts "YYYY-MM-DDTHH:MM:SSZ" or "YYYY-MM-DDTHH:MM:SS.mmmZ". Throws ParseError.
std::int64_t parse_utc_ms(std::string_view text);

}  // namespace stresslab
