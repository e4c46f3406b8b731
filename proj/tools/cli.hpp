#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace relucode::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kPropertyFailure = 3,
  kNumerical = 4,
};

/// Runs one command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace relucode::cli
