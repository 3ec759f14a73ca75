#pragma once

#include <stdexcept>
#include <string>

namespace cebound {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape mismatch, missing entries, or an object used outside its domain.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// A domain invariant (probability normalization, metric axioms, fiber
/// support, modulus domination, ...) does not hold.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

/// Conditioning on a history whose probability is zero.
class UnreachableHistory : public Error {
 public:
  using Error::Error;
};

/// Enumeration would exceed the configured node budget.
class SizingError : public Error {
 public:
  SizingError(const std::string& what, std::size_t required, std::size_t budget)
      : Error(what), required_(required), budget_(budget) {}
  std::size_t required() const noexcept { return required_; }
  std::size_t budget() const noexcept { return budget_; }

 private:
  std::size_t required_;
  std::size_t budget_;
};

/// Scenario parameters outside their documented ranges.
class SpecError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration or model file.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace cebound
