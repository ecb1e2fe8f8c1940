#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace ttv {

// 17-significant-digit float text, enough to round-trip a double exactly.
std::string csv_num(double v);
std::string csv_num(long long v);

// Comma-separated, '.' decimal separator, one header row; writes are
// streamed so long traces do not accumulate in memory.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns,
            const std::vector<std::string>& comment_lines = {});
  void row(const std::vector<std::string>& cells);
  void flush();
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream os_;
  std::size_t ncols_;
};

struct CsvTable {
  std::vector<std::string> comments;  // leading '#' lines, without the '#'
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  static CsvTable read(const std::string& path);
  int column_index(const std::string& name) const;  // -1 when absent
  double number(std::size_t row, int col) const;
};

}  // namespace ttv
