#pragma once

#include <stdexcept>
#include <string>

namespace aquagan {

// Root of every error raised by the library. The CLI maps the subclasses
// onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes that disagree, or a shape that violates an operation's precondition.
class DimensionError : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

// Dataset layout or content problems (missing directories, empty classes,
// variant/data mismatch, empty evaluation sets).
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or a diverged computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace aquagan
