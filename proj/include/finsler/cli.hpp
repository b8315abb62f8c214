#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace finsler {

/// Process exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitValidationFailure = 1,
  kExitUsage = 2,
  kExitDegenerate = 3,
  kExitEarlyStop = 4,
};

/// Runs one command (`geom`, `flow` or `validate`); args excludes the program
/// name. Reports go to `out`, errors to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace finsler
