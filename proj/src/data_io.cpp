#include "tcreg/data_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tcreg {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(trim(std::string_view(line).substr(start)));
      return out;
    }
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    start = comma + 1;
  }
}

std::string where(std::size_t line, std::size_t column) {
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

double parse_cell(const std::string& cell, std::size_t line, std::size_t column) {
  if (cell.empty()) throw DataError("empty cell at " + where(line, column));
  const char* first = cell.data();
  const char* last = first + cell.size();
  if (*first == '+') ++first;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw DataError("cannot parse '" + cell + "' as a number at " + where(line, column));
  }
  if (!std::isfinite(value)) throw DataError("non-finite value at " + where(line, column));
  return value;
}

}  // namespace

void Dataset::validate() const {
  if (X.rows() < 1) throw DataError("dataset has no rows");
  if (X.cols() < 1) throw DataError("dataset has no covariates");
  if (y.size() != X.rows()) throw DataError("response length does not match covariate rows");
  if (!X.allFinite()) throw DataError("covariates contain non-finite values");
  if (!y.allFinite()) throw DataError("response contains non-finite values");
  if (!column_names.empty() && static_cast<Index>(column_names.size()) != X.cols()) {
    throw DataError("column name count does not match covariates");
  }
}

Dataset Dataset::subset(const std::vector<Index>& rows) const {
  Dataset out;
  out.X = X(rows, Eigen::all);
  out.y = y(rows);
  out.column_names = column_names;
  return out;
}

UnitScaler fit_scaler(const Eigen::MatrixXd& X) {
  UnitScaler scaler;
  scaler.ranges.reserve(static_cast<std::size_t>(X.cols()));
  for (Index j = 0; j < X.cols(); ++j) {
    if (X.rows() == 0) {
      scaler.ranges.push_back({0.0, 0.0});
    } else {
      scaler.ranges.push_back({X.col(j).minCoeff(), X.col(j).maxCoeff()});
    }
  }
  return scaler;
}

CsvTable read_csv_table(const std::filesystem::path& path, bool header) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool have_header = !header;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split_fields(line);
    if (!have_header) {
      table.header = std::move(fields);
      width = table.header.size();
      have_header = true;
      continue;
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      throw DataError("line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                      " fields, expected " + std::to_string(width));
    }
    std::vector<double> row(width);
    for (std::size_t c = 0; c < width; ++c) row[c] = parse_cell(fields[c], line_no, c + 1);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path.string() + " contains no data rows");
  table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      table.values(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    }
  }
  return table;
}

Dataset dataset_from_table(const CsvTable& table, const ResponseColumn& response) {
  const Index width = table.values.cols();
  Index col = -1;
  if (const auto* name = std::get_if<std::string>(&response)) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (table.header[c] == *name) col = static_cast<Index>(c);
    }
    if (col < 0) throw DataError("response column '" + *name + "' not found");
  } else {
    col = std::get<Index>(response);
    if (col < 0 || col >= width) throw DataError("response column index " + std::to_string(col) + " out of range");
  }
  if (width < 2) throw DataError("no covariates: the file only holds the response column");

  Dataset data;
  data.y = table.values.col(col);
  std::vector<Index> keep;
  for (Index c = 0; c < width; ++c) {
    if (c == col) continue;
    keep.push_back(c);
    if (!table.header.empty()) data.column_names.push_back(table.header[static_cast<std::size_t>(c)]);
  }
  data.X = table.values(Eigen::all, keep);
  data.validate();
  return data;
}

Dataset load_csv(const std::filesystem::path& path, const ResponseColumn& response, bool header) {
  if (std::holds_alternative<std::string>(response) && !header) {
    throw DataError("response column given by name but the file has no header");
  }
  return dataset_from_table(read_csv_table(path, header), response);
}

}  // namespace tcreg
