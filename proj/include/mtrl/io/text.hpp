#pragma once

#include <string>
#include <string_view>

namespace mtrl::io {

/// Shortest decimal string that parses back to exactly `value`; plain notation
/// for 1e-6 <= |value| < 1e16, exponent notation otherwise.
std::string format_double(double value);
/// As format_double but never uses exponent notation.
std::string format_double_fixed(double value);

/// Throws ConfigError naming `what` if `text` is not entirely a number.
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

}  // namespace mtrl::io
