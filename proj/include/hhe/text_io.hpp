#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hhe {

// Shortest decimal form that round-trips exactly (std::to_chars).
std::string format_double(double x);

// Strict full-token parsers; `where` names the file location for the
// FormatError message (e.g. "line 7, column 3").
double parse_double(std::string_view token, const std::string& where);
long long parse_int(std::string_view token, const std::string& where);

std::vector<std::string_view> split(std::string_view line, char sep);

}  // namespace hhe
