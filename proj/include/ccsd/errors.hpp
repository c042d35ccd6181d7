#pragma once

#include <stdexcept>
#include <string>

namespace ccsd {

/// Base class for all library errors. exit_code() follows the CLI
/// convention: 2 config/schema, 3 data, 4 numerical degeneracy.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
  virtual int exit_code() const noexcept { return 1; }
};

/// Bad configuration, parameters, or file schema.
class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// Malformed or inconsistent input data (parse failures, shape mismatches).
class DataError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// Numerical degeneracy: zero-spread scales, underflowed kernels,
/// infeasible bandwidth filters.
class NumericError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

/// Scale estimate collapsed to zero (all inputs effectively identical).
class DegenerateScaleError : public NumericError {
 public:
  using NumericError::NumericError;
};

namespace detail {
/// Always-on internal invariant check.
inline void check(bool cond, const char* what) {
  if (!cond) throw NumericError(std::string("invariant violated: ") + what);
}
}  // namespace detail

}  // namespace ccsd
