#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace nbw {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Numeric sample matrix with named columns. Rows are observations.
///
/// Construction validates: at least one row and one column, one unique
/// name per column, and every value finite. Training-side operations
/// additionally require two or more rows.
class Dataset {
 public:
  Dataset(Matrix values, std::vector<std::string> column_names);

  const Matrix& values() const { return values_; }
  const std::vector<std::string>& column_names() const { return column_names_; }
  std::size_t n_rows() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t n_cols() const { return static_cast<std::size_t>(values_.cols()); }

  // Throws ConfigError when the name is absent.
  std::size_t column_index(const std::string& name) const;
  bool has_column(const std::string& name) const;
  Vector column(const std::string& name) const { return values_.col(column_index(name)); }

  Dataset select_rows(const std::vector<std::size_t>& rows) const;
  Dataset select_columns(const std::vector<std::size_t>& columns) const;

 private:
  Matrix values_;
  std::vector<std::string> column_names_;
};

struct VariableGroup {
  std::string name;
  std::vector<std::size_t> columns;
};

/// Intervention groups X_1..X_n and covariates Z as column-index lists.
/// Columns outside the layout (an outcome, say) are carried but never fed
/// to a critic.
struct VariableLayout {
  std::vector<VariableGroup> groups;
  std::vector<std::size_t> covariates;

  // Groups nonempty, indices < n_cols, all lists mutually disjoint.
  void validate(std::size_t n_cols) const;
  // Groups in order, then covariates.
  std::vector<std::size_t> input_columns() const;
  std::size_t input_width() const { return input_columns().size(); }

  static VariableLayout from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static VariableLayout load(const std::filesystem::path& path);
};

// Rows of `values` restricted to the layout's input columns, in input order.
Matrix critic_inputs(const Matrix& values, const VariableLayout& layout);
inline Matrix critic_inputs(const Dataset& data, const VariableLayout& layout) {
  return critic_inputs(data.values(), layout);
}

// Comma-separated, header row, '.' decimal point. Missing or non-numeric
// cells, ragged rows, and duplicate headers raise ParseError with location.
Dataset load_csv(const std::filesystem::path& path);
Dataset parse_csv(const std::string& text);
void save_csv(const Dataset& data, const std::filesystem::path& path);
std::string format_csv(const Dataset& data);

// Shortest decimal string that round-trips to the same double.
std::string format_double(double value);

}  // namespace nbw
