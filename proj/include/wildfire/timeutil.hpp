#pragma once

// UTC timestamps as seconds since the Unix epoch, with strict ISO-8601
// parsing ("YYYY-MM-DDTHH:MM:SSZ"). Calendar conversion uses the
// days-from-civil algorithm so round trips are exact for any year the
// pipeline will ever see.

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace wildfire {

using UtcTime = int64_t;  // seconds since 1970-01-01T00:00:00Z

constexpr int64_t kSecondsPerHour = 3600;
constexpr int64_t kSecondsPerDay = 86400;

struct TimeParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

constexpr int64_t days_from_civil(int64_t y, int m, int d) {
  y -= m <= 2;
  int64_t era = (y >= 0 ? y : y - 399) / 400;
  int64_t yoe = y - era * 400;
  int64_t doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

constexpr void civil_from_days(int64_t z, int64_t& y, int& m, int& d) {
  z += 719468;
  int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  int64_t doe = z - era * 146097;
  int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  int64_t mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = yoe + era * 400 + (m <= 2);
}

inline bool all_digits(const std::string& s, size_t pos, size_t count) {
  if (pos + count > s.size()) return false;
  for (size_t i = pos; i < pos + count; ++i)
    if (s[i] < '0' || s[i] > '9') return false;
  return true;
}

}  // namespace detail

inline UtcTime parse_iso8601(const std::string& text) {
  // YYYY-MM-DDTHH:MM:SSZ, exactly.
  auto fail = [&]() -> TimeParseError {
    return TimeParseError("not an ISO-8601 UTC timestamp: '" + text + "'");
  };
  if (text.size() != 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
      text[13] != ':' || text[16] != ':' || text[19] != 'Z')
    throw fail();
  if (!detail::all_digits(text, 0, 4) || !detail::all_digits(text, 5, 2) ||
      !detail::all_digits(text, 8, 2) || !detail::all_digits(text, 11, 2) ||
      !detail::all_digits(text, 14, 2) || !detail::all_digits(text, 17, 2))
    throw fail();
  int64_t year = std::stoll(text.substr(0, 4));
  int month = std::stoi(text.substr(5, 2));
  int day = std::stoi(text.substr(8, 2));
  int hour = std::stoi(text.substr(11, 2));
  int minute = std::stoi(text.substr(14, 2));
  int second = std::stoi(text.substr(17, 2));
  if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 ||
      minute > 59 || second > 60)
    throw fail();
  return detail::days_from_civil(year, month, day) * kSecondsPerDay +
         hour * 3600 + minute * 60 + second;
}

inline std::string format_iso8601(UtcTime t) {
  int64_t days = t / kSecondsPerDay;
  int64_t sod = t % kSecondsPerDay;
  if (sod < 0) {
    sod += kSecondsPerDay;
    days -= 1;
  }
  int64_t year;
  int month, day;
  detail::civil_from_days(days, year, month, day);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04lld-%02d-%02dT%02lld:%02lld:%02lldZ",
                static_cast<long long>(year), month, day,
                static_cast<long long>(sod / 3600),
                static_cast<long long>((sod % 3600) / 60),
                static_cast<long long>(sod % 60));
  return buf;
}

}  // namespace wildfire
