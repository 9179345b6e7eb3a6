#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace adarec::text {

// One decimal place, half away from zero ("11.15" -> "11.2"). Never prints "-0.0".
std::string fixed1(double value);

// Fixed decimals with the same rounding rule as fixed1.
std::string fixed(double value, int decimals);

// Shortest representation that parses back to the same double ("6", "0.1").
std::string shortest(double value);

// Collapse every whitespace run to one space and trim both ends.
std::string normalize_whitespace(std::string_view in);

std::string trim(std::string_view in);
std::string to_lower(std::string_view in);
std::vector<std::string> split(std::string_view in, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace adarec::text
