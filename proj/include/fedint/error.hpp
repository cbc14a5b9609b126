#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fedint {

enum class ErrorCode {
  // relational
  IoError,
  HeaderMismatch,
  ParseError,
  // mapping language
  SyntaxError,
  UnknownFunction,
  // exchange
  MissingNormalizationEntry,
  ImputerNotFitted,
  UnknownRelation,
  // imputation
  TypeMismatch,
  KindMismatch,
  DimensionMismatch,
  EmptyStats,
  SingularSystem,
  MissingFeature,
  // model
  ResidualNull,
  UnknownLabel,
  ShapeMismatch,
  EmptyDataset,
  TooFewRows,
  // runtime
  EmptyEntrySet,
  IncompatibleShapes,
  ZeroTotalContribution,
  ConfigError,
  LearnerFailure,
  MissingSubmission,
  OverflowRisk,
  ProtocolError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Unparseable CSV cell. `row` is 1-based over data rows (header excluded).
class CsvParseError : public Error {
 public:
  CsvParseError(std::size_t row, std::string column, const std::string& detail)
      : Error(ErrorCode::ParseError,
              "row " + std::to_string(row) + ", column '" + column + "': " + detail),
        row_(row),
        column_(std::move(column)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t line, std::size_t col, std::string expected)
      : Error(ErrorCode::SyntaxError, "line " + std::to_string(line) + ", col " +
                                          std::to_string(col) + ": expected " + expected),
        line_(line),
        col_(col),
        expected_(std::move(expected)) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t col() const noexcept { return col_; }
  const std::string& expected() const noexcept { return expected_; }

 private:
  std::size_t line_;
  std::size_t col_;
  std::string expected_;
};

}  // namespace fedint
