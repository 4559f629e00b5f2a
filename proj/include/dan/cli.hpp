#pragma once

#include <atomic>
#include <ostream>

namespace dan {

// Entry point of the `dan` tool. Returns the process exit code:
// 0 success, 1 runtime error, 2 bad arguments.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Set (e.g. from a signal handler) to make `dan train` stop after the
// current step and write a final checkpoint.
std::atomic<bool>& train_stop_flag();

}  // namespace dan
