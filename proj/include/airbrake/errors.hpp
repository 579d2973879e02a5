#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace airbrake {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller violated a documented precondition (descending state, bad k, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Configuration or model parameter failed validation. `field` is the dotted
/// path of the offending value, e.g. "rocket.dry_mass".
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A non-finite value appeared during numerical work. `where` names the
/// RK4 stage, network layer or (epoch, batch) position.
class DivergenceError : public Error {
 public:
  DivergenceError(std::string where, const std::string& what)
      : Error(what + " (" + where + ")"), where_(std::move(where)) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

/// integrate_until hit max_steps before the stop predicate held.
class TruncationError : public Error {
 public:
  TruncationError(std::vector<double> times,
                  std::vector<std::vector<double>> states)
      : Error("integration truncated at max_steps"),
        times_(std::move(times)),
        states_(std::move(states)) {}
  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<std::vector<double>>& states() const noexcept {
    return states_;
  }

 private:
  std::vector<double> times_;
  std::vector<std::vector<double>> states_;
};

/// Global error too small to measure a convergence order from.
class IndeterminateOrderError : public Error {
 public:
  using Error::Error;
};

class EmptyDatasetError : public Error {
 public:
  using Error::Error;
};

class DegenerateFeatureError : public Error {
 public:
  explicit DegenerateFeatureError(std::string column)
      : Error("zero-variance feature column: " + column),
        column_(std::move(column)) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

class InsufficientMinorityError : public Error {
 public:
  using Error::Error;
};

class StratificationError : public Error {
 public:
  using Error::Error;
};

/// Filesystem-level failure (missing file, unwritable path).
class IoError : public Error {
 public:
  using Error::Error;
};

/// A CSV row could not be parsed. Line numbers are 1-based and count the
/// header.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Model file failures.
class VersionMismatchError : public Error {
 public:
  using Error::Error;
};

class ShapeMismatchError : public Error {
 public:
  using Error::Error;
};

class CorruptedPayloadError : public Error {
 public:
  using Error::Error;
};

class BenchmarkResolutionError : public Error {
 public:
  using Error::Error;
};

}  // namespace airbrake
