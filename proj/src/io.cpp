#include "qmele/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qmele/errors.hpp"

namespace qmele::io {

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return s.substr(first, last - first + 1);
}

bool parse_double(const std::string& text, double& out) {
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

}  // namespace

std::vector<double> read_csv_column(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file '" + path + "'");

  std::string line;
  std::size_t row = 0;
  std::size_t column = 0;
  bool resolved = false;

  const auto resolve_index = [&]() {
    if (options.column.empty()) return std::size_t{0};
    std::size_t idx = 0;
    const auto [ptr, ec] = std::from_chars(options.column.data(), options.column.data() + options.column.size(), idx);
    if (ec != std::errc() || ptr != options.column.data() + options.column.size() || idx == 0) {
      throw DataError("column '" + options.column + "' needs a header row in '" + path + "'");
    }
    return idx - 1;
  };

  if (options.header) {
    while (std::getline(in, line)) {
      ++row;
      if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) throw DataError("input file '" + path + "' is empty");
    const auto names = split_row(line);
    if (options.column.empty()) {
      column = 0;
    } else {
      bool found = false;
      for (std::size_t i = 0; i < names.size(); ++i) {
        if (trim(names[i]) == options.column) {
          column = i;
          found = true;
          break;
        }
      }
      if (!found) column = resolve_index();
    }
    resolved = true;
  }
  if (!resolved) column = resolve_index();

  std::vector<double> values;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_row(line);
    if (column >= cells.size()) {
      throw DataError("'" + path + "' row " + std::to_string(row) + ": missing column " + std::to_string(column + 1));
    }
    const std::string cell = trim(cells[column]);
    double v = 0.0;
    if (!parse_double(cell, v)) {
      throw DataError("'" + path + "' row " + std::to_string(row) + ": non-numeric cell '" + cell + "'");
    }
    values.push_back(v);
  }
  if (values.empty()) throw DataError("input file '" + path + "' contains no data rows");
  return values;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "NA";
  if (std::isinf(value)) return value > 0 ? "Inf" : "-Inf";
  if (value == 0.0) return "0";  // folds -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw DataError("cannot create directory '" + p.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file '" + path + "'");
  out << content;
  if (!out) throw DataError("error while writing '" + path + "'");
}

std::string column_csv(const std::string& header, std::span<const double> values) {
  std::string out = header + "\n";
  for (double v : values) {
    out += format_number(v);
    out += '\n';
  }
  return out;
}

}  // namespace qmele::io
