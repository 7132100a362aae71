#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mdg {

// Malformed inputs, schema violations, shape mismatches. The CLI maps
// these to exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Diverging or non-finite optimization. The CLI maps these to exit code 3.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : DataError {
  ParseError(std::size_t line_no, const std::string& reason)
      : DataError("line " + std::to_string(line_no) + ": " + reason),
        line(line_no) {}
  std::size_t line;
};

struct InvariantViolation : DataError {
  InvariantViolation(const std::string& id, const std::string& detail)
      : DataError("graph '" + id + "': " + detail), graph_id(id) {}
  std::string graph_id;
};

struct UnknownNode : DataError {
  using DataError::DataError;
};

struct ShapeMismatch : DataError {
  using DataError::DataError;
};

struct NonFiniteLoss : NumericError {
  using NumericError::NumericError;
};

}  // namespace mdg
