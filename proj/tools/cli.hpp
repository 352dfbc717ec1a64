#pragma once

#include <ostream>

namespace quietclock::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCompareFailed = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRuntimeError = 3;

// Entry point behind the quietclock executable; argv[0] is the program name.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace quietclock::cli
