// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sm2 {

// Base for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Raised when an energy measurement cannot be formed (e.g. no power samples).
class MeasurementError : public Error {
 public:
  using Error::Error;
};

class OrderingError : public Error {
 public:
  using Error::Error;
};

class SnapshotError : public Error {
 public:
  using Error::Error;
};

// Configuration problems. `path` names the offending key, e.g. "objective.alpha".
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& message)
      : Error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// A loss went non-finite. Carries the index of the offending batch within the
// call that raised it.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t batch_index, double loss)
      : Error("non-finite loss at batch " + std::to_string(batch_index)),
        batch_index_(batch_index),
        loss_(loss) {}

  std::size_t batch_index() const noexcept { return batch_index_; }
  double loss() const noexcept { return loss_; }

 private:
  std::size_t batch_index_;
  double loss_;
};

// Malformed input file. `line` is 1-based; 0 when not applicable.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(line ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A cell that should be numeric is not.
class TypedParseError : public ParseError {
 public:
  TypedParseError(std::size_t line, std::string column, std::string cell)
      : ParseError(line, "column '" + column + "': expected a number, got '" + cell + "'"),
        column_(std::move(column)),
        cell_(std::move(cell)) {}

  const std::string& column() const noexcept { return column_; }
  const std::string& cell() const noexcept { return cell_; }

 private:
  std::string column_;
  std::string cell_;
};

// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

class ComparisonError : public Error {
 public:
  using Error::Error;
};

// Scheduler gave up on the run (every configuration diverged, or the final
// configuration diverged during thorough training).
class RunAborted : public Error {
 public:
  using Error::Error;
};

}  // namespace sm2
