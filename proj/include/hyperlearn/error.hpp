#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hyperlearn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input, violated precondition or shape mismatch.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ParseError : public InvalidArgument {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : InvalidArgument(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Non-finite values or divergence during optimization.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace hyperlearn
