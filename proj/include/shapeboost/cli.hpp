#pragma once

#include <iosfwd>

namespace shapeboost {

/// Exit codes of the command-line front-end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUserError = 2;
inline constexpr int kExitNumericalError = 3;

/// Parses argv and runs the subcommand. Regular output goes to `out`,
/// diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace shapeboost
