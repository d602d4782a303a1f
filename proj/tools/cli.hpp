#pragma once

#include <iosfwd>

namespace posecascade::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitRuntime = 3;

// Entry point of the posecascade tool: subcommands synth, train, eval and
// predict. Never throws; errors are written to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace posecascade::cli
