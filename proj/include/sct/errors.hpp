// Copyright (c) 2026 SCT contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace sct {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Operand dimensions do not match.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or numeric breakdown.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A pivot column collapsed to numerical zero during a factorization.
class DegenerateColumnError : public NumericError {
 public:
  DegenerateColumnError(const std::string& msg, int column)
      : NumericError(msg), column_(column) {}
  int column() const noexcept { return column_; }

 private:
  int column_;
};

/// Iterative algorithm exhausted its sweep budget.
class ConvergenceError : public NumericError {
 public:
  ConvergenceError(const std::string& msg, double residual)
      : NumericError(msg), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Rank outside [1, min(m, n)] or incompatible with the layer dimensions.
class RankError : public Error {
 public:
  using Error::Error;
};

/// Configuration problem: bad key, missing section, invalid value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Refused to materialize a buffer larger than the configured guard.
class GuardError : public Error {
 public:
  using Error::Error;
};

/// Filesystem or serialization failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace sct
