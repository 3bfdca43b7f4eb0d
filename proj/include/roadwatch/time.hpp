#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace roadwatch {

using Millis = std::chrono::milliseconds;
/// Absolute UTC instant at millisecond resolution.
using UtcInstant = std::chrono::sys_time<Millis>;

/// Calendar date without a time of day (contract dates).
using Date = std::chrono::year_month_day;

/// Renders `YYYY-MM-DDTHH:MM:SSZ`, or `...SS.mmmZ` when the instant carries
/// a sub-second part.
std::string format_iso(UtcInstant t);

/// Parses `YYYY-MM-DDTHH:MM:SS[.f+]Z`. Returns nullopt on any mismatch or
/// invalid calendar field.
std::optional<UtcInstant> parse_iso(std::string_view s);

std::string format_date(Date d);
/// Strict `YYYY-MM-DD`.
std::optional<Date> parse_date(std::string_view s);

inline std::int64_t to_epoch_ms(UtcInstant t) { return t.time_since_epoch().count(); }
inline UtcInstant from_epoch_ms(std::int64_t ms) { return UtcInstant{Millis{ms}}; }

/// First instant after the end of `d` (UTC), i.e. midnight of the next day.
inline UtcInstant end_of_day(Date d) {
  return UtcInstant{std::chrono::sys_days{d} + std::chrono::days{1}};
}

inline Date utc_date(UtcInstant t) {
  return Date{std::chrono::floor<std::chrono::days>(t)};
}

}  // namespace roadwatch
