#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mvlab {

/// Exit statuses of the command-line front end.
enum ExitStatus : int {
  kExitOk = 0,
  kExitClaimFailed = 1,
  kExitHypothesisViolated = 2,
  kExitInputError = 3,
};

int run(int argc, char** argv);
/// Same as above without the program name; output goes to the given streams.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mvlab
