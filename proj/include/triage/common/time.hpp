#pragma once

#include <cstdint>
#include <functional>
#include <string>

namespace triage {

// Unix seconds, UTC.
using Timestamp = std::int64_t;
using Clock = std::function<Timestamp()>;

Timestamp system_now();

// "2024-05-01T09:00:00Z". Parsing accepts fractional seconds (truncated) and
// numeric offsets; throws Error(ParseError).
std::string format_rfc3339(Timestamp t);
Timestamp parse_rfc3339(const std::string& s);

}  // namespace triage
