#pragma once

#include <iosfwd>

namespace strikeconv {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;

/// Entry point of the `strikeconv` tool; writes results to `out` and a single
/// `error: kind=<input|numerical> message=...` line to `err` on failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace strikeconv
