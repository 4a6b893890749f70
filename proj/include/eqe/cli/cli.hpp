#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace eqe::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 2,
    kExitNumerical = 3,
    kExitInfeasible = 4,
    kExitSelfcheckFailed = 5,
};

/// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace eqe::cli
