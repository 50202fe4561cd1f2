#pragma once

#include <stdexcept>
#include <string>

namespace odeinv::ode {

/// Forward and inverse expressions disagree, are undefined, or the Jacobian
/// vanishes on the validation grid.
class MapInvalid : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The transformed right-hand side is not cubic in the new slope. This is
/// an implementation bug, never a property of the input.
class ClosureViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class DomainMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularEvaluation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed ODE or map file, including an expression that does not parse.
/// line() is 1-based; 0 when no single line is at fault.
class FileFormatError : public std::runtime_error {
 public:
  FileFormatError(int line, const std::string& what) : std::runtime_error(what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace odeinv::ode
