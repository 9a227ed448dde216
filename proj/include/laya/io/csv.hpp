#pragma once

// Minimal CSV for the files this project writes: comma-separated, no quoting,
// first line is the header.

#include <string>
#include <vector>

namespace laya::io {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by name; FormatError when absent.
  std::size_t column(const std::string& name) const;
};

// Every row must have the header's width, else FormatError.
CsvTable parse_csv(const std::string& text, const std::string& source = "csv");

double parse_csv_double(const std::string& cell, const std::string& where);
long long parse_csv_int(const std::string& cell, const std::string& where);

}  // namespace laya::io
