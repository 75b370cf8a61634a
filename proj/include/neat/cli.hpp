#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace neat {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 2,
    kExitIo = 3,
    kExitDomain = 4,
    kExitInternal = 5,
};

/// Runs one command line (without the program name). Progress goes to
/// `out`; failures produce exactly one line on `err` of the form
///   error: code=<n> kind=<kind> message="<text>"
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace neat
