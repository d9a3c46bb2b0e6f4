#pragma once

#include <stdexcept>
#include <string>

namespace rlreach {

// Caller broke a documented precondition (wrong vector length, shape mismatch).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Value outside its mathematical domain (out-of-limit angle, negative distance, NaN).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class LookupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation not allowed in the object's current lifecycle state.
class LifecycleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite loss, gradient or parameter during training.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// User-supplied configuration rejected before any side effect happens.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An existing artifact on disk does not match its schema; never repaired silently.
class CorruptionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A hyperparameter study ended without any completed trial.
class StudyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rlreach
