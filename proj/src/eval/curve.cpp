#include "mtrl/eval/curve.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mtrl/errors.hpp"
#include "mtrl/io/text.hpp"

namespace mtrl::eval {

void write_curve(const std::vector<CurveRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << kCurveHeader << '\n';
  for (const auto& r : rows) {
    out << r.env_name << ',' << r.env_steps << ',' << io::format_double_fixed(r.mean_return) << ','
        << io::format_double_fixed(r.std_return) << ',' << io::format_double_fixed(r.wall_clock_s)
        << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<CurveRow> read_curve(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCurveHeader) {
    throw ConfigError(path.string() + ": missing curve header");
  }
  std::vector<CurveRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (fields.size() != 5) throw ConfigError(path.string() + ": malformed curve row '" + line + "'");
    CurveRow r;
    r.env_name = fields[0];
    r.env_steps = io::parse_int(fields[1], "steps");
    r.mean_return = io::parse_double(fields[2], "mean_return");
    r.std_return = io::parse_double(fields[3], "std_return");
    r.wall_clock_s = io::parse_double(fields[4], "wall_clock_s");
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace mtrl::eval
