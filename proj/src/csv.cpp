#include "greensec/csv.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace greensec {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

int CsvTable::column(const std::string& name, const std::string& file) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  throw ArgumentError((file.empty() ? std::string("csv") : file) +
                      ": missing required column \"" + name + "\"");
}

bool CsvTable::has_column(const std::string& name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

CsvTable parse_csv(const std::string& text, const std::string& name) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() && in.eof()) break;
    auto fields = split_line(line);
    if (lineno == 1) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw ArgumentError(name + ":" + std::to_string(lineno) + ": expected " +
                          std::to_string(t.header.size()) + " fields, got " +
                          std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  if (t.header.empty())
    throw ArgumentError(name + ":1: empty file, expected a header row");
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), path);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError(path + ": cannot open file for writing");
  for (std::size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << row[i];
    out << "\n";
  }
  if (!out) throw ArgumentError(path + ": write failed");
}

double parse_field_double(const CsvTable& t, std::size_t row, int col, const std::string& file) {
  const std::string& s = t.rows[row][static_cast<std::size_t>(col)];
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE)
    throw ArgumentError(file + ":" + std::to_string(row + 2) + ": bad numeric value \"" + s +
                        "\" in column " + t.header[static_cast<std::size_t>(col)]);
  return v;
}

long parse_field_long(const CsvTable& t, std::size_t row, int col, const std::string& file) {
  const std::string& s = t.rows[row][static_cast<std::size_t>(col)];
  errno = 0;
  char* end = nullptr;
  long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE)
    throw ArgumentError(file + ":" + std::to_string(row + 2) + ": bad integer value \"" + s +
                        "\" in column " + t.header[static_cast<std::size_t>(col)]);
  return v;
}

Vec read_vector_csv(const std::string& path, int expected_size) {
  CsvTable t = read_csv(path);
  int ci = t.column("target_index", path);
  int cv = t.column("value", path);
  int n = expected_size >= 0 ? expected_size : static_cast<int>(t.rows.size());
  if (static_cast<int>(t.rows.size()) != n)
    throw ArgumentError(path + ": expected " + std::to_string(n) + " rows, got " +
                        std::to_string(t.rows.size()));
  Vec v = Vec::Constant(n, std::nan(""));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    long idx = parse_field_long(t, r, ci, path);
    if (idx < 0 || idx >= n)
      throw ArgumentError(path + ":" + std::to_string(r + 2) + ": target_index " +
                          std::to_string(idx) + " out of range [0, " + std::to_string(n) + ")");
    v[idx] = parse_field_double(t, r, cv, path);
  }
  for (int i = 0; i < n; ++i)
    if (std::isnan(v[i]))
      throw ArgumentError(path + ": no row for target_index " + std::to_string(i));
  return v;
}

void write_vector_csv(const std::string& path, const Vec& v) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(static_cast<std::size_t>(v.size()));
  for (int i = 0; i < v.size(); ++i)
    rows.push_back({std::to_string(i), format_double(v[i])});
  write_csv(path, {"target_index", "value"}, rows);
}

}  // namespace greensec
