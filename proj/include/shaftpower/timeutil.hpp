#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace shaftpower {

/// Seconds since 1970-01-01T00:00:00Z.
using UtcSeconds = std::int64_t;

inline constexpr UtcSeconds kSecondsPerDay = 86400;

/// Parses `YYYY-MM-DDTHH:MM:SSZ` (the trailing `Z` is optional) or a bare
/// `YYYY-MM-DD`. Throws DataError on anything else.
UtcSeconds parse_iso8601(std::string_view text);

/// Parses `YYYY-MM-DD` to midnight UTC.
UtcSeconds parse_date(std::string_view text);

std::string format_iso8601(UtcSeconds t);
std::string format_date(UtcSeconds t);

/// Index of the UTC calendar day containing `t` (floor division).
inline std::int64_t day_index(UtcSeconds t) {
  return t >= 0 ? t / kSecondsPerDay : -((-t + kSecondsPerDay - 1) / kSecondsPerDay);
}

}  // namespace shaftpower
