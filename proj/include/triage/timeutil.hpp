#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace triage {

/// All instants are UTC with one-second resolution.
using Instant = std::chrono::sys_seconds;
using std::chrono::seconds;

// "YYYY-MM-DDTHH:MM:SSZ" (a "+00:00" suffix is also accepted on input).
std::optional<Instant> parse_iso8601_utc(std::string_view text);
std::string format_iso8601_utc(Instant t);

// l2tcsv calendar fields: MM/DD/YYYY and HH:MM:SS.
std::optional<std::chrono::year_month_day> parse_us_date(std::string_view text);
std::string format_us_date(std::chrono::year_month_day date);
std::optional<seconds> parse_time_of_day(std::string_view text);
std::string format_time_of_day(seconds time_of_day);

/// Converts a wall-clock reading in `zone` to UTC.
///
/// `zone` may be UTC/GMT/Z, a fixed offset ("+02:00", "-0500", "UTC+3",
/// "GMT-05:30"), a common abbreviation (EST, CEST, JST, ...) or an IANA name
/// looked up in the system zoneinfo database. Returns nullopt when the zone is
/// unknown, or when the local time falls in a DST gap or fold and therefore
/// does not name exactly one instant.
std::optional<Instant> resolve_local_time(std::chrono::year_month_day date, seconds time_of_day,
                                          std::string_view zone);

/// Fixed-offset lookup only (no zoneinfo access); exposed for tests.
std::optional<seconds> fixed_zone_offset(std::string_view zone);

}  // namespace triage
