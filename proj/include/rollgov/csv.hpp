#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace rollgov {

/// Deterministic CSV emission: fixed %.10g number formatting, no locale.
class CsvWriter {
public:
  explicit CsvWriter(const std::string& path) : out_(path) {
    if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path);
  }

  void header(const std::vector<std::string>& cols) {
    for (size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
    out_ << "\n";
  }

  CsvWriter& field(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    row_.push_back(buf);
    return *this;
  }

  CsvWriter& field(int v) {
    row_.push_back(std::to_string(v));
    return *this;
  }

  CsvWriter& field(const std::string& s) {
    row_.push_back(s);
    return *this;
  }

  void end_row() {
    for (size_t i = 0; i < row_.size(); ++i) out_ << (i ? "," : "") << row_[i];
    out_ << "\n";
    row_.clear();
  }

private:
  std::ofstream out_;
  std::vector<std::string> row_;
};

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

} // namespace rollgov
