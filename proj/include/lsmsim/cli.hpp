#pragma once

namespace lsmsim {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitData = 3, kExitSkipped = 4 };

int run_cli(int argc, char** argv);

}  // namespace lsmsim
