#pragma once

#include <iosfwd>

#include "usjoint/error.hpp"

namespace usjoint {

/// Process exit codes, one per failure class.
enum ExitCode : int {
  exit_ok = 0,
  exit_unexpected = 1,
  exit_usage = 2,      // unknown flags, bad option values
  exit_config = 3,     // run config rejected
  exit_io = 4,         // read/write failure
  exit_missing = 5,    // input file or dataset not found
  exit_format = 6,     // container magic/version/size problems
  exit_invariant = 7,  // inputs violate a precondition
  exit_numerical = 8,  // divergence, non-finite values, unresolved metrics
};

int exit_code_for(ErrorKind kind);

/// Entry point of the `usjoint` tool. Output goes to `out`, the one-line
/// diagnostic on failure to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace usjoint
