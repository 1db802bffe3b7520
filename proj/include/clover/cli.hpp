// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace clover::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;

/// Runs one `clover-forge` subcommand. Results and the one-line summary go
/// to `out`, diagnostics and usage text to `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace clover::cli
