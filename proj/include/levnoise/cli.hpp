#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace levnoise {

/// Stable process exit codes.
enum ExitCode : int {
  exit_ok = 0,
  exit_usage = 1,
  exit_config = 2,
  exit_domain = 3,
  exit_io = 4,
  exit_simulation = 5,
};

/// Entry point for the `levnoise` tool. `args` excludes the program name.
/// Subcommands: budget, simulate, psd, optimize.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace levnoise
