#pragma once

#include <string>
#include <vector>

namespace stmtl::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

// Strict RFC-ish reader: comma separated, optional double-quote quoting,
// every row must have the header's field count. Throws DataError with a
// 1-based line number on malformed input.
Table read_file(const std::string& path);
Table read_string(const std::string& text);

std::string escape_field(const std::string& field);
void write_file(const std::string& path, const Table& table);

// Full-precision numeric formatting used by every CSV/report writer so
// exports round-trip and reruns are byte-identical.
std::string format_double(double x);
double parse_double(const std::string& field, int line_no, const std::string& col);

}  // namespace stmtl::csv
