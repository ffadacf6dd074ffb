#pragma once

#include <iosfwd>

namespace mtrl {

inline constexpr const char* kVersion = "0.1.0";

/// Entry point of the `mtrl` command line tool. Returns the process exit code.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mtrl
