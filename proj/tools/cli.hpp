#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace stformer::cli {

/// Process exit codes.
enum ExitCode : int { kOk = 0, kConfigError = 2, kDataError = 3, kRuntimeError = 4 };

/// Runs one command line (without the program name). Diagnostics go to `err`,
/// tables and artifact paths to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stformer::cli
