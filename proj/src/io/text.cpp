#include "mtrl/io/text.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "mtrl/errors.hpp"

namespace mtrl::io {

std::string format_double(double value) {
  const double mag = std::abs(value);
  if (value == 0.0 || (mag >= 1e-6 && mag < 1e16)) return format_double_fixed(value);
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::scientific);
  return std::string(buf, end);
}

std::string format_double_fixed(double value) {
  char buf[512];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
  return std::string(buf, end);
}

double parse_double(std::string_view text, std::string_view what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError(std::string(what) + ": '" + std::string(text) + "' is not a number");
  }
  return v;
}

long long parse_int(std::string_view text, std::string_view what) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError(std::string(what) + ": '" + std::string(text) + "' is not an integer");
  }
  return v;
}

}  // namespace mtrl::io
