#pragma once

#include <stdexcept>
#include <string>

namespace relembed {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: schema descriptors, config files, bad arguments.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Data violates the schema (keys, foreign keys, nulls, arity).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, singular systems and similar numeric failures.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A file written by an incompatible version of this library.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace relembed
