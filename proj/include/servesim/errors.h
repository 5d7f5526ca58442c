#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace servesim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Prompt longer than the largest bucket.
class NoBucket : public Error {
 public:
  using Error::Error;
};

class OutOfBlocks : public Error {
 public:
  using Error::Error;
};

// A block table references a block it does not own. Always an engine bug.
class ForeignBlock : public Error {
 public:
  using Error::Error;
};

class WrongKind : public Error {
 public:
  using Error::Error;
};

// No sequence can make progress under the current configuration.
class Deadlock : public Error {
 public:
  using Error::Error;
};

class WrongMode : public Error {
 public:
  using Error::Error;
};

class InvalidSpec : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
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

}  // namespace servesim
