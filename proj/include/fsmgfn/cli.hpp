#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fsmgfn {

/// Process exit statuses shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,  // invalid logs, or a run that failed numerically
  kExitUsage = 2,       // bad flags, malformed config/FSM/CSV
  kExitIo = 3,          // unreadable or unwritable files
};

/// Entry point of the `fsmgfn` tool; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fsmgfn
