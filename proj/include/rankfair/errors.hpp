#pragma once

#include <stdexcept>

namespace rankfair {

// Input data violates the dataset contract; the message carries a line or
// record locator so the offending row can be found.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A file could not be opened, read, or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A statistical routine was handed a sample it cannot work with.
class StatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fewer observations than the test needs.
class InsufficientSampleError : public StatError {
 public:
  using StatError::StatError;
};

// Zero variance where the test divides by it.
class DegenerateSampleError : public StatError {
 public:
  using StatError::StatError;
};

}  // namespace rankfair
