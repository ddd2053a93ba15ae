#pragma once

#include <stdexcept>
#include <string>

namespace softvoronoi {

// Raised when a caller passes arguments that violate an operation's
// preconditions (dimension mismatch, non-bijective permutation, n < k, ...).
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

// Raised on I/O and parse failures; the message names the file and line.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace softvoronoi
