#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace posecascade {

// Argument outside an operation's domain (non-finite coordinate, bad size).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Tensor or layer shapes that do not chain.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A pose with no fully labeled torso pair has no diameter.
class MissingTorsoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Zero-size joint box (zero diameter or zero sigma).
class DegenerateBoxError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Undecodable or truncated file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed manifest or config text; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line,
             const std::string& message)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " +
                           message),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Well-formed data that breaks a data-model invariant (k mismatch etc.).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke an API contract, e.g. a backward cache from another network.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Operation cannot run in the current state (e.g. empty training set).
class InvalidState : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace posecascade
