#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace textanon::cli {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 2,
  kExitTraining = 3,
  kExitLoad = 4,
  kExitBenchmark = 5,
};

/// Log level comes from this environment variable (trace, debug, info, warn,
/// error, off); the default is info.
inline constexpr const char* kLogLevelEnv = "TEXTANON_LOG_LEVEL";

/// Runs one command. `args[0]` is the program name. Reports go to `out`,
/// diagnostics and logs to `err`.
int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace textanon::cli
