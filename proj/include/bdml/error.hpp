#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bdml {

/// Failure classes map one-to-one onto CLI exit codes.
enum class ErrorKind { Config = 2, Data = 3, Numerical = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::Numerical, what) {}
};

/// Zero is not strictly inside the convex hull of the moment values.
class InfeasibleMoment : public NumericalError {
 public:
  explicit InfeasibleMoment(const std::string& what) : NumericalError(what) {}
};

class NonConvergence : public NumericalError {
 public:
  NonConvergence(const std::string& what, double sum_residual, double moment_residual)
      : NumericalError(what),
        sum_residual(sum_residual),
        moment_residual(moment_residual) {}
  double sum_residual;
  double moment_residual;
};

}  // namespace bdml
