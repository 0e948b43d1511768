#include "tsdm/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "tsdm/errors.hpp"
#include "tsdm/serialize.hpp"

namespace tsdm {

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      cells.push_back(was_quoted ? cur : trim(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur += c;
    }
  }
  if (quoted) throw ValidationError("unterminated quote on line " + std::to_string(line_no));
  cells.push_back(was_quoted ? cur : trim(cur));
  return cells;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

double parse_number(const std::string& s, std::size_t line_no, const std::string& col) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (s.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
    throw ValidationError("line " + std::to_string(line_no) + ", column '" + col +
                          "': '" + s + "' is not a finite number");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::size_t RawCsv::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ValidationError("missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

RawCsv parse_csv(const std::string& text) {
  RawCsv csv;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    auto cells = split_line(line, line_no);
    if (csv.header.empty()) {
      csv.header = std::move(cells);
      continue;
    }
    if (cells.size() != csv.header.size())
      throw ValidationError("line " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " fields, header has " +
                            std::to_string(csv.header.size()));
    csv.rows.push_back(std::move(cells));
  }
  if (csv.header.empty()) throw ValidationError("CSV has no header");
  return csv;
}

std::string format_csv(const RawCsv& csv) {
  std::string out;
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += quote(cells[i]);
    }
    out += '\n';
  };
  emit(csv.header);
  for (const auto& r : csv.rows) emit(r);
  return out;
}

std::size_t Table::attribute_index(const std::string& name) const {
  const auto it = std::find(attributes.begin(), attributes.end(), name);
  if (it == attributes.end()) throw ValidationError("missing attribute column '" + name + "'");
  return static_cast<std::size_t>(it - attributes.begin());
}

Table Table::select_attributes(const std::vector<std::string>& names) const {
  std::vector<std::size_t> cols;
  for (const auto& n : names) cols.push_back(attribute_index(n));
  Table t;
  t.ids = ids;
  t.labels = labels;
  t.labeled = labeled;
  t.attributes = names;
  for (std::size_t i = 0; i < values.rows(); ++i) {
    std::vector<double> row;
    for (std::size_t c : cols) row.push_back(values(i, c));
    t.values.append_row(row);
  }
  return t;
}

Table Table::select_rows(const std::vector<std::size_t>& rows) const {
  Table t;
  t.attributes = attributes;
  t.labeled = labeled;
  for (std::size_t r : rows) {
    t.ids.push_back(ids.at(r));
    if (labeled) t.labels.push_back(labels.at(r));
  }
  t.values = values.select_rows(rows);
  return t;
}

Table parse_table(const std::string& text) {
  const RawCsv csv = parse_csv(text);
  if (csv.header.front() != "id") throw ValidationError("first CSV column must be 'id'");
  Table t;
  std::size_t first_attr = 1;
  if (csv.header.size() > 1 && csv.header[1] == "label") {
    t.labeled = true;
    first_attr = 2;
  }
  t.attributes.assign(csv.header.begin() + static_cast<std::ptrdiff_t>(first_attr), csv.header.end());
  if (t.attributes.empty()) throw ValidationError("CSV has no attribute columns");
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    t.ids.push_back(row[0]);
    if (t.labeled) {
      if (row[1].empty()) throw ValidationError("empty label on data row " + std::to_string(r + 1));
      t.labels.push_back(row[1]);
    }
    std::vector<double> vals;
    for (std::size_t c = first_attr; c < row.size(); ++c)
      vals.push_back(parse_number(row[c], r + 2, csv.header[c]));
    t.values.append_row(vals);
  }
  return t;
}

std::string format_table(const Table& t) {
  RawCsv csv;
  csv.header.push_back("id");
  if (t.labeled) csv.header.push_back("label");
  csv.header.insert(csv.header.end(), t.attributes.begin(), t.attributes.end());
  for (std::size_t i = 0; i < t.ids.size(); ++i) {
    std::vector<std::string> row{t.ids[i]};
    if (t.labeled) row.push_back(t.labels[i]);
    for (std::size_t c = 0; c < t.attributes.size(); ++c) row.push_back(format_double(t.values(i, c)));
    csv.rows.push_back(std::move(row));
  }
  return format_csv(csv);
}

Table read_table(const std::string& path) { return parse_table(read_text_file(path)); }

void write_table(const std::string& path, const Table& table) {
  write_text_file(path, format_table(table));
}

}  // namespace tsdm
