#pragma once

#include <span>
#include <string>
#include <vector>

namespace qmele::io {

struct CsvOptions {
  bool header = true;
  /// Column name (needs a header) or 1-based column index; empty selects the first column.
  std::string column;
};

/// Reads one numeric column. Errors are DataError naming the file and row.
std::vector<double> read_csv_column(const std::string& path, const CsvOptions& options);

/// Fixed 6-significant-digit rendering used for every numeric CSV cell.
std::string format_number(double value);

/// Writes `content` to `path`, creating parent directories. Throws DataError on failure.
void write_file(const std::string& path, const std::string& content);

/// Single-column CSV with a header line.
std::string column_csv(const std::string& header, std::span<const double> values);

}  // namespace qmele::io
