#pragma once

#include <stdexcept>
#include <string>

namespace hubscope {

// Input or contract violation: bad shapes, out-of-range parameters, malformed
// files. The CLI maps these to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure that is not the caller's fault: non-convergence, a
// degenerate intermediate. The CLI maps these to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hubscope
