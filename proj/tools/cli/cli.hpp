#pragma once

#include <iosfwd>

namespace dpt::cli {

/// Process exit codes. Stable contract for scripts.
enum ExitCode : int {
  kExitOk = 0,
  kExitIo = 1,  // I/O or dataset/report integrity failure
  kExitUsage = 2,
  kExitOverflow = 3,    // bench: host or consumer memory overflow
  kExitInfeasible = 4,  // tune: every grid cell overflowed
};

/// Entry point shared by the `dpt` executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dpt::cli
