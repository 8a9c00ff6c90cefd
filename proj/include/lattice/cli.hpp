#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lattice::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kParseError = 2,
  kValidationError = 3,
  kRuntimeError = 4,
};

// Entry point shared by the executable and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lattice::cli
