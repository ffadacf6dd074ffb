#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace mtrl::eval {

/// One learning-curve sample.
struct CurveRow {
  std::string env_name;
  long long env_steps = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
  double wall_clock_s = 0.0;

  bool operator==(const CurveRow&) const = default;
};

inline constexpr const char* kCurveHeader = "env,steps,mean_return,std_return,wall_clock_s";

/// CSV with header kCurveHeader, one row per record, shortest round-trip fixed notation.
void write_curve(const std::vector<CurveRow>& rows, const std::filesystem::path& path);
std::vector<CurveRow> read_curve(const std::filesystem::path& path);

}  // namespace mtrl::eval
