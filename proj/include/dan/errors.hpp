#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dan {

// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class UnsupportedFormat : public Error {
 public:
  using Error::Error;
};

class DegenerateInstance : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class TooLarge : public Error {
 public:
  using Error::Error;
};

// Illegal action in the environment (visited city, forbidden depot, ...).
class ConstraintViolation : public Error {
 public:
  using Error::Error;
};

class NotDeciding : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class EmptySupport : public Error {
 public:
  using Error::Error;
};

class MissingGraph : public Error {
 public:
  using Error::Error;
};

class TrainingDivergence : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace dan
