#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dhlab {

// Process exit codes of the dhlab tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,     // a check failed or an unexpected error occurred
  kExitConfig = 2,      // malformed config or command line
  kExitDivergence = 3,  // solver divergence
  kExitTopology = 4,    // operation unsupported on the field's topology
};

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace dhlab
