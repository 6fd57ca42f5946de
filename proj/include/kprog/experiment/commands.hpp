#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace kprog::experiment {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitData = 3,
  kExitDiverged = 4,
};

// The command-line tool: simulate | train | evaluate | study {noise|early|extrapolate|spectrum}.
// args excludes the program name. Progress goes to log, results to files.
int run_cli(const std::vector<std::string>& args, std::ostream& log);

}  // namespace kprog::experiment
