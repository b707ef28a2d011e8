#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace drsae::csv {

struct Row {
  std::size_t line = 0;  // 1-based line number in the source file
  std::vector<std::string> fields;
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;

  std::optional<std::size_t> column(std::string_view name) const;
  std::size_t require_column(std::string_view name, std::string_view file) const;
};

/// Reads a comma-separated file with a header row. Double-quoted fields
/// may contain commas; blank lines are skipped.
Table read(const std::string& path);
Table parse(std::string_view text, const std::string& source = "<memory>");

/// Locale-independent strict parse; rejects trailing garbage, NaN and inf.
std::optional<double> to_double(std::string_view s);
std::optional<long long> to_integer(std::string_view s);

/// Shortest representation that round-trips exactly.
std::string format(double v);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace drsae::csv
