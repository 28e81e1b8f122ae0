#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace evcharge {

/// Naive local wall-clock time at one-second resolution. No timezone
/// arithmetic is ever applied; the epoch is only a counting origin.
using Timestamp = std::chrono::sys_seconds;

/// Parses the compact `YYYYMMDDHHMMSS` form used by trajectory records.
std::optional<Timestamp> parse_compact_timestamp(std::string_view text);

/// Parses `YYYY-MM-DDTHH:MM:SS`.
std::optional<Timestamp> parse_iso8601(std::string_view text);

std::string format_iso8601(Timestamp t);
std::string format_compact(Timestamp t);

/// Hour of day in [0, 24).
int hour_of_day(Timestamp t);

/// Day index counted from the epoch; consecutive calendar days differ by one.
long day_index(Timestamp t);

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour = 0, int minute = 0,
                         int second = 0);

} // namespace evcharge
