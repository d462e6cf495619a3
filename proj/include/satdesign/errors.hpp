#pragma once

#include <stdexcept>
#include <string>

namespace satdesign {

// Base for every error raised by the library. The CLI maps ConstraintError
// subclasses to exit code 2 and everything else to 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class DegenerateAssignment : public Error {
 public:
  using Error::Error;
};

class ConstraintError : public Error {
 public:
  using Error::Error;
};

class UnsupportedConfiguration : public ConstraintError {
 public:
  using ConstraintError::ConstraintError;
};

class ModelMismatch : public ConstraintError {
 public:
  using ConstraintError::ConstraintError;
};

class TooLarge : public ConstraintError {
 public:
  using ConstraintError::ConstraintError;
};

class AssumptionViolation : public ConstraintError {
 public:
  using ConstraintError::ConstraintError;
};

}  // namespace satdesign
