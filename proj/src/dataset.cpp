#include "nbw/dataset.hpp"

#include "nbw/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace nbw {

Dataset::Dataset(Matrix values, std::vector<std::string> column_names)
    : values_(std::move(values)), column_names_(std::move(column_names)) {
  if (values_.rows() < 1) throw ConfigError("dataset must have at least one row");
  if (values_.cols() < 1) throw ConfigError("dataset must have at least one column");
  if (column_names_.size() != static_cast<std::size_t>(values_.cols())) {
    throw ConfigError("dataset has " + std::to_string(values_.cols()) + " columns but " +
                      std::to_string(column_names_.size()) + " names");
  }
  std::unordered_set<std::string> seen;
  for (const auto& name : column_names_) {
    if (!seen.insert(name).second) throw ConfigError("duplicate column name '" + name + "'");
  }
  if (!values_.allFinite()) throw ConfigError("dataset contains non-finite values");
}

std::size_t Dataset::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < column_names_.size(); ++i) {
    if (column_names_[i] == name) return i;
  }
  throw ConfigError("no column named '" + name + "'");
}

bool Dataset::has_column(const std::string& name) const {
  for (const auto& c : column_names_) {
    if (c == name) return true;
  }
  return false;
}

Dataset Dataset::select_rows(const std::vector<std::size_t>& rows) const {
  Matrix out(static_cast<Eigen::Index>(rows.size()), values_.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= n_rows()) throw ConfigError("row index out of range");
    out.row(static_cast<Eigen::Index>(i)) = values_.row(static_cast<Eigen::Index>(rows[i]));
  }
  return Dataset(std::move(out), column_names_);
}

Dataset Dataset::select_columns(const std::vector<std::size_t>& columns) const {
  Matrix out(values_.rows(), static_cast<Eigen::Index>(columns.size()));
  std::vector<std::string> names;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j] >= n_cols()) throw ConfigError("column index out of range");
    out.col(static_cast<Eigen::Index>(j)) = values_.col(static_cast<Eigen::Index>(columns[j]));
    names.push_back(column_names_[columns[j]]);
  }
  return Dataset(std::move(out), std::move(names));
}

void VariableLayout::validate(std::size_t n_cols) const {
  if (groups.empty()) throw ConfigError("layout needs at least one group");
  std::set<std::size_t> used;
  auto claim = [&](std::size_t c, const std::string& owner) {
    if (c >= n_cols) {
      throw ConfigError("layout column " + std::to_string(c) + " in " + owner + " is out of range for " +
                        std::to_string(n_cols) + " columns");
    }
    if (!used.insert(c).second) {
      throw ConfigError("layout column " + std::to_string(c) + " appears more than once");
    }
  };
  for (const auto& g : groups) {
    if (g.columns.empty()) throw ConfigError("layout group '" + g.name + "' is empty");
    for (auto c : g.columns) claim(c, "group '" + g.name + "'");
  }
  for (auto c : covariates) claim(c, "covariates");
}

std::vector<std::size_t> VariableLayout::input_columns() const {
  std::vector<std::size_t> cols;
  for (const auto& g : groups) cols.insert(cols.end(), g.columns.begin(), g.columns.end());
  cols.insert(cols.end(), covariates.begin(), covariates.end());
  return cols;
}

VariableLayout VariableLayout::from_json(const nlohmann::json& j) {
  VariableLayout layout;
  try {
    for (const auto& g : j.at("groups")) {
      layout.groups.push_back({g.at("name").get<std::string>(), g.at("columns").get<std::vector<std::size_t>>()});
    }
    if (j.contains("covariates")) layout.covariates = j.at("covariates").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid layout JSON: ") + e.what());
  }
  return layout;
}

nlohmann::json VariableLayout::to_json() const {
  nlohmann::json j;
  j["groups"] = nlohmann::json::array();
  for (const auto& g : groups) j["groups"].push_back({{"name", g.name}, {"columns", g.columns}});
  j["covariates"] = covariates;
  return j;
}

VariableLayout VariableLayout::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open layout file " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid layout JSON: ") + e.what());
  }
}

Matrix critic_inputs(const Matrix& values, const VariableLayout& layout) {
  const auto cols = layout.input_columns();
  Matrix out(values.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = values.col(static_cast<Eigen::Index>(cols[j]));
  }
  return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

Dataset parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw ParseError("empty CSV input");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  std::vector<std::string> header;
  for (auto& h : split_line(line)) header.push_back(trim(h));
  std::unordered_set<std::string> seen;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j].empty()) throw ParseError("empty column name", 1, j + 1);
    if (!seen.insert(header[j]).second) throw ParseError("duplicate column name '" + header[j] + "'", 1, j + 1);
  }

  std::vector<double> cells;
  std::size_t row = 1;  // 1-based file line of the header
  std::size_t n_rows = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto parts = split_line(line);
    if (parts.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(parts.size()),
                       row, std::min(parts.size(), header.size()) + 1);
    }
    for (std::size_t j = 0; j < parts.size(); ++j) {
      const auto cell = trim(parts[j]);
      double value = 0.0;
      const auto* begin = cell.data();
      const auto* end = cell.data() + cell.size();
      auto [ptr, ec] = std::from_chars(begin, end, value);
      if (cell.empty() || ec != std::errc() || ptr != end) {
        throw ParseError("non-numeric cell '" + cell + "' in column '" + header[j] + "'", row, j + 1);
      }
      if (!std::isfinite(value)) throw ParseError("non-finite cell in column '" + header[j] + "'", row, j + 1);
      cells.push_back(value);
    }
    ++n_rows;
  }
  if (n_rows == 0) throw ParseError("CSV has a header but no data rows");

  Matrix values(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(header.size()));
  for (std::size_t i = 0; i < n_rows; ++i) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cells[i * header.size() + j];
    }
  }
  return Dataset(std::move(values), std::move(header));
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str());
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string format_csv(const Dataset& data) {
  std::string out;
  const auto& names = data.column_names();
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (j) out += ',';
    out += names[j];
  }
  out += '\n';
  const auto& v = data.values();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      if (j) out += ',';
      out += format_double(v(i, j));
    }
    out += '\n';
  }
  return out;
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << format_csv(data);
}

}  // namespace nbw
