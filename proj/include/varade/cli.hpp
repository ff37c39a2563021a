#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace varade {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumeric = 3,
};

/// Entry point of the `varade` tool. `args` excludes the program name.
/// Subcommands: synth, train, score, eval, bench.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err);

}  // namespace varade
