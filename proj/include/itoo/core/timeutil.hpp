#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace itoo {

using Timestamp = std::chrono::sys_seconds;

/// Accepts `YYYY-MM-DDTHH:MM:SS` with optional `Z` suffix (UTC only).
Timestamp parse_iso8601(std::string_view text);
std::string format_iso8601(Timestamp t);

/// Whole days elapsed from `then` to `now` (floor); negative if `then` is in the future.
std::int64_t whole_days_between(Timestamp then, Timestamp now);

}  // namespace itoo
