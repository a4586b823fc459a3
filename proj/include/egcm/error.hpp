#pragma once

#include <stdexcept>
#include <string>

namespace egcm {

// Bad user input: missing columns, malformed rows, invalid parameters.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Schema problems are input errors that name the offending column.
class SchemaError : public InputError {
 public:
  explicit SchemaError(std::string column)
      : InputError("missing column: " + column), column_(std::move(column)) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

// A persisted artifact (checkpoint, graph file, stats file) is unreadable.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite quantity.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes do not line up.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace egcm
