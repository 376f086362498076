#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cubeforest::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 1, kDataError = 2 };

// Parses argv-style arguments (args[0] is the program name) and runs the
// selected subcommand. Normal output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Used when a subcommand reads "-" as its input.
void set_standard_input(std::istream& in);

}  // namespace cubeforest::cli
