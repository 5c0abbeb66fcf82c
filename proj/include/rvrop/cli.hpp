#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rvrop::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kInputError = 2, kUnsat = 3 };

/// Runs one command line (without the program name). Reports go to `out`,
/// diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rvrop::cli
