#include "ttevolve/csv.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "ttevolve/common.hpp"

namespace ttv {

std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_num(long long v) { return std::to_string(v); }

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& columns,
                     const std::vector<std::string>& comment_lines)
    : path_(path), os_(path), ncols_(columns.size()) {
  if (!os_) throw StructuralError("CsvWriter: cannot open " + path);
  if (columns.empty()) throw StructuralError("CsvWriter: no columns");
  for (auto const& c : comment_lines) os_ << "# " << c << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i)
    os_ << columns[i] << (i + 1 < columns.size() ? "," : "\n");
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != ncols_)
    throw StructuralError("CsvWriter: row width " + std::to_string(cells.size()) +
                          " != header width " + std::to_string(ncols_));
  for (std::size_t i = 0; i < cells.size(); ++i)
    os_ << cells[i] << (i + 1 < cells.size() ? "," : "\n");
}

void CsvWriter::flush() { os_.flush(); }

static std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

CsvTable CsvTable::read(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw StructuralError("CsvTable: cannot open " + path);
  CsvTable t;
  std::string line;
  bool have_header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::size_t start = line.size() > 1 && line[1] == ' ' ? 2 : 1;
      t.comments.push_back(line.substr(start));
      continue;
    }
    auto cells = split_csv_line(line);
    if (!have_header) {
      t.columns = std::move(cells);
      have_header = true;
    } else {
      if (cells.size() != t.columns.size())
        throw StructuralError("CsvTable: ragged row in " + path);
      t.rows.push_back(std::move(cells));
    }
  }
  if (!have_header) throw StructuralError("CsvTable: no header row in " + path);
  return t;
}

int CsvTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

double CsvTable::number(std::size_t row, int col) const {
  if (row >= rows.size() || col < 0 || col >= static_cast<int>(columns.size()))
    throw StructuralError("CsvTable: cell out of range");
  const std::string& s = rows[row][col];
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw StructuralError("CsvTable: non-numeric cell '" + s + "'");
  }
}

}  // namespace ttv
