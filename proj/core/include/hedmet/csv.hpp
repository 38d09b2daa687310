#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hedmet::csv {

// Minimal CSV support for the formats this project reads and writes:
// comma-separated, one header row, no quoting or embedded commas.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // each row has header.size() cells

  // Column position by name, -1 if absent.
  int col(const std::string& name) const;
  // Column position by name; throws naming the column if absent.
  int col_required(const std::string& name, const std::string& context) const;
};

Table parse(std::istream& in, const std::string& context);
Table read_file(const std::string& path);

// Numeric cell parse; errors name the 1-based data row and the column.
double to_double(const std::string& cell, const std::string& context, int row,
                 const std::string& column);
long to_long(const std::string& cell, const std::string& context, int row,
             const std::string& column);

// Floating-point cells are written with 17 significant digits so values
// round-trip exactly through the readers above.
std::string fmt(double value);

void write_file(const std::string& path, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows);

}  // namespace hedmet::csv
