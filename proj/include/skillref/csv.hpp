#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace skillref::csv {

/// Shortest-round-trip decimal form (17 significant digits).
inline std::string format(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

class Writer {
 public:
  Writer(const std::filesystem::path& path,
         const std::vector<std::string>& columns) {
    if (path.has_parent_path())
      std::filesystem::create_directories(path.parent_path());
    out_.open(path);
    if (!out_)
      throw std::runtime_error("cannot open " + path.string() +
                               " for writing");
    columns_ = columns.size();
    for (size_t i = 0; i < columns.size(); ++i) {
      if (i) out_ << ',';
      out_ << columns[i];
    }
    out_ << '\n';
  }

  void row(const std::vector<double>& values) {
    if (values.size() != columns_)
      throw std::invalid_argument("csv row width mismatch");
    for (size_t i = 0; i < values.size(); ++i) {
      if (i) out_ << ',';
      out_ << format(values[i]);
    }
    out_ << '\n';
  }

  void close() { out_.close(); }

 private:
  std::ofstream out_;
  size_t columns_{};
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

/// Minimal reader for files produced by Writer (no quoting).
inline Table read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Table table;
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path.string() + ": empty csv");
  std::stringstream header(line);
  for (std::string cell; std::getline(header, cell, ',');)
    table.columns.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream cells(line);
    for (std::string cell; std::getline(cells, cell, ',');)
      row.push_back(std::stod(cell));
    if (row.size() != table.columns.size())
      throw std::runtime_error(path.string() + ": ragged csv row");
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace skillref::csv
