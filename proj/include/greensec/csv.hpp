#pragma once

#include <map>
#include <string>
#include <vector>

#include "greensec/common.hpp"

namespace greensec {

// Minimal CSV support: comma delimiter, header row, LF line endings, UTF-8.
// Parse errors carry the file name and 1-based line number.

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a required column; throws ArgumentError naming the column.
  int column(const std::string& name, const std::string& file = "") const;
  bool has_column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text, const std::string& name);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

double parse_field_double(const CsvTable& t, std::size_t row, int col, const std::string& file);
long parse_field_long(const CsvTable& t, std::size_t row, int col, const std::string& file);

// Flat per-target vector files (header: target_index,value).
Vec read_vector_csv(const std::string& path, int expected_size = -1);
void write_vector_csv(const std::string& path, const Vec& v);

}  // namespace greensec
