#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dsd {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2 };

/// Entry point shared by the `dsd` binary and the tests:
/// generate | mask | eval | residuals.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dsd
