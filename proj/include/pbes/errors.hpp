#ifndef PBES_ERRORS_HPP
#define PBES_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pbes {

// Precondition or schema violation. Maps to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Unreadable, missing or malformed file. Maps to exit code 3.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-convergence or non-finite values during computation. Maps to exit code 4.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pbes

#endif  // PBES_ERRORS_HPP
