#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kinv {

enum ExitCode : int {
  kExitOk = 0,
  /// A verification command ran but a check failed.
  kExitCheckFailed = 1,
  kExitUsage = 2,
  kExitConfig = 3,
  kExitMissingFile = 4,
  kExitInstability = 5,
  kExitInternal = 6,
};

/// Runs one subcommand (`args` excludes the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kinv
