#pragma once

#include <ostream>

namespace aimc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

// Subcommands: nqs, svdd, ensemble, bench-host, sweep, report.
// The report goes to `out` (and to --out when given); diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace aimc
