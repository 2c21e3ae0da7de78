#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evolal {

// Root of every error the toolkit throws. The CLI maps subclasses to exit
// codes, so each failure family gets its own type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LengthError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  SchemaError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ParseError : public SchemaError {
 public:
  using SchemaError::SchemaError;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ModelStateError : public Error {
 public:
  using Error::Error;
};

class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class ConditioningError : public Error {
 public:
  using Error::Error;
};

class LeakageError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double primal, double dual)
      : Error(what + " (primal residual " + std::to_string(primal) + ", dual residual " +
              std::to_string(dual) + ")"),
        primal_(primal),
        dual_(dual) {}
  double primal_residual() const { return primal_; }
  double dual_residual() const { return dual_; }

 private:
  double primal_;
  double dual_;
};

}  // namespace evolal
