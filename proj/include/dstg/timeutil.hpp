#pragma once

#include <cstdint>
#include <string>

namespace dstg {

// UTC wall-clock helpers for RFC 3339 timestamps ("2024-01-01T06:30:00Z").
// Only the Z (UTC) suffix is accepted; offsets are out of scope.

std::int64_t parse_rfc3339(const std::string& s);  // epoch seconds; throws ValidationError
std::string format_rfc3339(std::int64_t epoch_seconds);

// Monday = 0 ... Sunday = 6.
int day_of_week(std::int64_t epoch_seconds);
// Seconds elapsed since the UTC midnight of the timestamp's day.
int seconds_of_day(std::int64_t epoch_seconds);

}  // namespace dstg
