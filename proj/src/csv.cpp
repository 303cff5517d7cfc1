#include "rgd/csv.hpp"

#include <sstream>

#include "rgd/io.hpp"

namespace rgd {

CsvTable read_csv(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  CsvTable table;
  std::istringstream lines(text);
  std::string line;
  bool first = true;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string cell;
    if (first) {
      while (std::getline(cells, cell, ',')) table.header.push_back(cell);
      first = false;
      continue;
    }
    std::vector<double> row;
    while (std::getline(cells, cell, ',')) {
      try {
        row.push_back(cell == "nan" ? std::numeric_limits<double>::quiet_NaN()
                                    : std::stod(cell));
      } catch (...) {
        row.push_back(std::numeric_limits<double>::quiet_NaN());
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace rgd
