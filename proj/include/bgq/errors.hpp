#pragma once

#include <stdexcept>
#include <string>

namespace bgq {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or out-of-contract input (wrong block order, arity mismatch, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Enumeration or memory cap would be exceeded.
class CapacityError : public Error {
 public:
  explicit CapacityError(const std::string& what) : Error("capacity: " + what) {}
};

// Argument outside the supported numerical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Matrix inversion failed on a quadrature node.
class SingularMatrix : public Error {
 public:
  using Error::Error;
};

// Truncation of an improper integral cannot meet the requested tolerance.
class TailBoundError : public Error {
 public:
  using Error::Error;
};

}  // namespace bgq
