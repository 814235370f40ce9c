#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace abn {

inline constexpr const char* kVersion = "1.0.0";

/// Runs the command line in-process. `args` excludes the program name.
/// Returns the exit status; errors are printed to `err` as one line
/// "error: <Kind>: <message>".
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace abn
