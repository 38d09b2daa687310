#include "hedmet/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hedmet/error.hpp"

namespace hedmet::csv {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ls(line);
  while (std::getline(ls, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

int Table::col(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

int Table::col_required(const std::string& name, const std::string& context) const {
  int c = col(name);
  if (c < 0) fail(context, ": missing column '", name, "'");
  return c;
}

Table parse(std::istream& in, const std::string& context) {
  Table t;
  std::string line;
  if (!std::getline(in, line)) fail(context, ": empty file");
  t.header = split_line(strip_cr(line));
  int row = 0;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    ++row;
    auto cells = split_line(line);
    if (cells.size() != t.header.size())
      fail(context, ": row ", row, ": expected ", t.header.size(), " cells, got ",
           cells.size());
    t.rows.push_back(std::move(cells));
  }
  return t;
}

Table read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("csv: cannot open '", path, "'");
  return parse(in, path);
}

double to_double(const std::string& cell, const std::string& context, int row,
                 const std::string& column) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    fail(context, ": row ", row, ": column '", column, "': cannot parse '", cell,
         "' as number");
  return v;
}

long to_long(const std::string& cell, const std::string& context, int row,
             const std::string& column) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  long v = std::strtol(begin, &end, 10);
  if (end == begin || *end != '\0')
    fail(context, ": row ", row, ": column '", column, "': cannot parse '", cell,
         "' as integer");
  return v;
}

std::string fmt(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void write_file(const std::string& path, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) fail("csv: cannot write '", path, "'");
  for (size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

}  // namespace hedmet::csv
