#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sdreamer::cli {

// Exit codes: stable contract for scripting.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // runtime failure (data, numerics, I/O)
inline constexpr int kExitUsage = 2;    // bad flags or config

// Runs one command (`args` excludes the program name). Records and reports
// go to `out`, diagnostics and progress to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sdreamer::cli
