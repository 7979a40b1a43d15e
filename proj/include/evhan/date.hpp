#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace evhan {

using Date = std::chrono::year_month_day;

/// Parses an ISO-8601 calendar date "YYYY-MM-DD".
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date d);

/// Validates an RFC 3339 timestamp (a bare date is also accepted) and
/// returns the calendar date as written, ignoring the UTC offset.
std::optional<Date> timestamp_date(std::string_view timestamp);

inline std::chrono::sys_days to_days(Date d) { return std::chrono::sys_days{d}; }

}  // namespace evhan
