#pragma once

#include <stdexcept>
#include <string>

namespace tcrf {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& msg, int line, int column)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Program is syntactically valid but violates a load-time invariant.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// Explanation search failed (resource limit, cycle, unsupported construct).
class SearchError : public Error {
 public:
  using Error::Error;
};

class StepLimitExceeded : public SearchError {
 public:
  using SearchError::SearchError;
};

class CyclicExplanation : public SearchError {
 public:
  using SearchError::SearchError;
};

class ExplosionError : public Error {
 public:
  using Error::Error;
};

/// Numerical problem in inference or training.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent data: non-unique complete explanation, containment
/// violation, unprovable goal, out-of-domain value.
class DataError : public Error {
 public:
  using Error::Error;
};

class TransformError : public Error {
 public:
  using Error::Error;
};

}  // namespace tcrf
