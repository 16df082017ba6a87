#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace codeattn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by the Java lexer and comment stripper; carries a 1-based source position.
class LexError : public Error {
 public:
  LexError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what + " at " + std::to_string(line) + ":" + std::to_string(column)),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class LengthError : public Error {
 public:
  using Error::Error;
};

class VocabularyError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// A training step produced a non-finite value; tensor() names where it first appeared.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(std::string tensor)
      : Error("non-finite value in " + tensor), tensor_(std::move(tensor)) {}
  const std::string& tensor() const noexcept { return tensor_; }

 private:
  std::string tensor_;
};

}  // namespace codeattn
