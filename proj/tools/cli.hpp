#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ali::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kPartialFailure = 3 };

/// Runs the atomic_li command line; argv[0] is the program name.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace ali::cli
