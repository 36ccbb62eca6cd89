#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gman {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor/layer dimension mismatches.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid argument values (stride 0, negative beta, crop too large, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Using a tensor id that was never registered on the tape.
class GraphError : public Error {
 public:
  using Error::Error;
};

// Optimizer state out of sync with parameters (e.g. missing gradients).
class StateError : public Error {
 public:
  using Error::Error;
};

// Filesystem/stream failures.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed serialized data; carries the byte offset of the defect.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace gman
