#pragma once

#include <stdexcept>
#include <string>

namespace slicesim {

// Invalid input data or configuration: schema violations, broken invariants,
// unknown ids, bad flag values. Messages name the offending element.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The exact solver ran out of its node or time budget before proving
// optimality or infeasibility. Never downgraded to a silent suboptimal
// answer.
class ResourceLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Committing an allocation would exceed a live capacity: the solution was
// produced against a snapshot the state has since moved past. The state is
// left untouched.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace slicesim
