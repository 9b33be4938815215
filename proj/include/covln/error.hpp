#pragma once

#include <stdexcept>
#include <string>

namespace covln {

/// Raised whenever an operation's precondition on its input is violated.
/// Every rejected input in the library surfaces as this type (or a subclass),
/// so callers such as the CLI can map it to a nonzero exit with a diagnostic.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace covln
