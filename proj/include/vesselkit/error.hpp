#pragma once

#include <stdexcept>
#include <string>

namespace vesselkit {

// Bad or inconsistent input data: malformed files, grid mismatches, empty
// inputs where a value is required. Maps to CLI exit code 3.
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// An internal postcondition failed. Maps to CLI exit code 4.
class InvariantError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

class GridMismatch : public DataError {
public:
  using DataError::DataError;
};

class EmptyMask : public DataError {
public:
  using DataError::DataError;
};

class OutOfRange : public DataError {
public:
  using DataError::DataError;
};

} // namespace vesselkit
