#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace attend::csv {

using Row = std::vector<std::string>;

/// Minimal RFC-4180 reader: quoted fields, doubled quotes, CRLF or LF.
/// Blank lines are skipped. Each row remembers the 1-based line it started on.
struct Table {
  Row header;
  std::vector<Row> rows;
  std::vector<std::size_t> lines;
};

Table read(std::istream& in);
Table read(std::string_view text);

/// Quotes the field only when it contains a delimiter, quote or newline.
std::string escape(std::string_view field);
std::string join(const Row& fields);

/// Index of `name` in `header` (trimmed, case-insensitive), or npos.
std::size_t find_column(const Row& header, std::string_view name);

}  // namespace attend::csv
