#pragma once

#include <stdexcept>
#include <string>

namespace bdfnb {

// Process exit codes used by the command line front end.
enum class ExitCode : int {
  ok = 0,
  config = 2,
  data = 3,
  solver = 4,
  accuracy = 5,
  internal = 70,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& w) : Error(ExitCode::config, w) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& w) : Error(ExitCode::data, w) {}
};

// Violated precondition on numerical input (unnormalised state, non-orthonormal pair, ...).
class PreconditionError : public DataError {
 public:
  explicit PreconditionError(const std::string& w) : DataError(w) {}
};

class SolverError : public Error {
 public:
  SolverError(const std::string& w, double last_residual)
      : Error(ExitCode::solver, w), last_residual_(last_residual) {}
  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

class AccuracyError : public Error {
 public:
  explicit AccuracyError(const std::string& w) : Error(ExitCode::accuracy, w) {}
};

void require_finite(double x, const char* what);

}  // namespace bdfnb
