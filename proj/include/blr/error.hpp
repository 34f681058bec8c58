#pragma once

#include <stdexcept>
#include <string>

namespace blr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A leaf refers to a covariate that does not exist in the data.
class IndexError : public Error {
 public:
  IndexError(int index, long columns)
      : Error("covariate index " + std::to_string(index) + " out of range (" +
              std::to_string(columns) + " columns)"),
        index_(index) {}
  int index() const noexcept { return index_; }

 private:
  int index_;
};

/// Text that does not follow the expression grammar.
class ParseError : public Error {
 public:
  ParseError(const std::string& text, std::size_t pos, const std::string& what)
      : Error("cannot parse expression '" + text + "' at " + std::to_string(pos) + ": " + what),
        text_(text) {}
  const std::string& text() const noexcept { return text_; }

 private:
  std::string text_;
};

/// Bad caller input (invalid configuration, violated precondition).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace blr
