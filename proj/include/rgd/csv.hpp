#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "rgd/errors.hpp"

namespace rgd {

// Minimal CSV plumbing: numeric tables with a header row. Doubles print with
// %.17g so written values re-read bit-exact.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : out_(path, std::ios::trunc) {
    if (!out_) throw ConfigError("cannot open csv for writing: " + path.string());
  }
  void header(const std::vector<std::string>& names) { line(names); }
  void row(const std::vector<double>& values) {
    std::string s;
    char buf[32];
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) s += ',';
      std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
      s += buf;
    }
    out_ << s << '\n';
  }
  void raw_row(const std::string& s) { out_ << s << '\n'; }

 private:
  void line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }
  std::ofstream out_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw ConfigError("csv column not found: " + name);
  }
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace rgd
