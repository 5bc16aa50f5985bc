#pragma once

#include <string>
#include <vector>

namespace distcl {

// Minimal strict CSV: comma separated, first row is the header, no quoting
// (none of our fields contain commas). Cell whitespace is trimmed on read.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 if absent
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text, const std::string& origin = "<string>");
void write_csv(const std::string& path, const CsvTable& table);
std::string csv_to_string(const CsvTable& table);

}  // namespace distcl
