#pragma once

#include <ostream>

namespace hubscope::cli {

// Entry point of the hubscope command. Exit codes: 0 success, 2 invalid
// input or usage, 3 numerical failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hubscope::cli
