#pragma once

#include <stdexcept>
#include <string>

namespace nbw {

// Invalid configuration, layout, or shape. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. Maps to CLI exit code 2.
class ParseError : public ConfigError {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : ConfigError(what + " (row " + std::to_string(row) + ", column " + std::to_string(column) + ")"),
        row_(row),
        column_(column) {}
  explicit ParseError(const std::string& what) : ConfigError(what) {}

  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_ = 0;
  std::size_t column_ = 0;
};

// Numerical breakdown during training or evaluation: an exponent left the
// representable range or a parameter became non-finite. Maps to exit code 3.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double magnitude)
      : std::runtime_error(what), magnitude_(magnitude) {}

  // Offending exponent argument (or NaN when the source was already non-finite).
  double magnitude() const { return magnitude_; }

 private:
  double magnitude_;
};

// Linear-algebra failure that regularisation could not rescue.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nbw
