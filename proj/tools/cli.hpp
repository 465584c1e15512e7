#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace volfilter::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kComputeError = 3,
};

/// Runs the command line `args` (without the program name). Tables written
/// to "-" go to `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Default seed: $VOLFILTER_SEED when set, otherwise 1.
unsigned long long default_seed();

}  // namespace volfilter::cli
