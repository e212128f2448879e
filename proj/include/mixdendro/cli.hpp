#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mixdendro::cli {

/// Exit codes: 0 success, 1 invalid input, 2 numerical failure.
inline constexpr int kOk = 0;
inline constexpr int kInvalidInput = 1;
inline constexpr int kNumericalFailure = 2;

/// Runs one command line. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mixdendro::cli
