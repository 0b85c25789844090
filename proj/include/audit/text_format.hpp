#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace audit {

/// Locale-independent fixed-point rendering; rounded zero prints without a sign.
std::string format_fixed(double value, int decimals);

/// Shortest round-trip rendering of a double (used for CSV cells).
std::string format_shortest(double value);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// UTC wall-clock timestamp, ISO-8601 with millisecond precision.
std::string utc_timestamp_now();

}  // namespace audit
