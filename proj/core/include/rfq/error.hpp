#pragma once

#include <stdexcept>
#include <string>

namespace rfq {

/// Base class for every error raised by rfqkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (bad SimConfig, missing inputs for a mode, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Carries the 1-based row and the column name when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, long row = -1, std::string column = {})
      : Error(format(what, row, column)), row_(row), column_(std::move(column)) {}

  long row() const { return row_; }
  const std::string& column() const { return column_; }

 private:
  static std::string format(const std::string& what, long row, const std::string& column) {
    std::string msg = what;
    if (row >= 0) msg += " (row " + std::to_string(row) + ")";
    if (!column.empty()) msg += " (column '" + column + "')";
    return msg;
  }

  long row_;
  std::string column_;
};

/// A numerical routine produced a non-finite value or could not proceed.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace rfq
