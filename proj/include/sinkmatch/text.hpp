#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sinkmatch {

/// Splits on sep, keeping empty fields ("a,,b" -> {"a", "", "b"}).
std::vector<std::string> split_fields(std::string_view line, char sep);

std::string_view trim(std::string_view s);

/// Strict numeric parsing: the whole (trimmed) token must be consumed.
/// `context` names the source location for the DataError message, e.g.
/// "dets.txt line 12 field 3".
double parse_double(std::string_view token, const std::string& context);
long parse_long(std::string_view token, const std::string& context);

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double v);

}  // namespace sinkmatch
