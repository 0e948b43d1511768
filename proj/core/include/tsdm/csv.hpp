#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tsdm/matrix.hpp"

namespace tsdm {

/// Table in the pipeline's CSV layout: `id`, optional `label`, then numeric
/// attribute columns.
struct Table {
  std::vector<std::string> ids;
  /// Empty when the file has no label column.
  std::vector<std::string> labels;
  std::vector<std::string> attributes;
  Matrix values;
  bool labeled = false;

  /// Column of values for the named attribute; throws ValidationError.
  std::size_t attribute_index(const std::string& name) const;
  /// Table restricted to the given attributes, in the given order.
  Table select_attributes(const std::vector<std::string>& names) const;
  Table select_rows(const std::vector<std::size_t>& rows) const;
};

Table parse_table(const std::string& text);
std::string format_table(const Table& table);

Table read_table(const std::string& path);
void write_table(const std::string& path, const Table& table);

/// Generic CSV with a header and string cells.
struct RawCsv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
};

RawCsv parse_csv(const std::string& text);
std::string format_csv(const RawCsv& csv);

/// Shortest text that reads back to the same double.
std::string format_double(double v);

}  // namespace tsdm
