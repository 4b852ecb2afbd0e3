#pragma once

#include <ostream>

namespace heraldmux {

/// Exit codes of the command-line tool.
enum ExitCode : int { exit_ok = 0, exit_validation = 2, exit_runtime = 3 };

/// Entry point of the heraldmux tool; everything is written to out/err.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace heraldmux
