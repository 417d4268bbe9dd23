#pragma once

#include <ostream>
#include <span>
#include <string>

namespace sparselbm {

/// Exit statuses of the command-line driver.
enum ExitStatus : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

/// Runs one subcommand (generate, preprocess, analyze, solve, bench, info).
/// args[0] is the program name. Diagnostics go to `err` as one line.
int run_command(std::span<const std::string> args, std::ostream& out, std::ostream& err);

} // namespace sparselbm
