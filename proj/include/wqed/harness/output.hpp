#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wqed/errors.hpp"

namespace wqed::harness {

/// Shortest text that parses back to the same double (up to 17 significant digits).
inline std::string format_number(double x) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

/// Writes `content` to a sibling temp file and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp);
    f << content;
    if (!f) throw std::runtime_error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

/// CSV table with a '#' comment header carrying provenance.
class CsvTable {
 public:
  CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void comment(const std::string& key, const std::string& value) { comments_.emplace_back(key, value); }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size()) throw std::logic_error("CSV row width mismatch");
    rows_.push_back(cells);
  }

  std::string str() const {
    std::string out;
    for (const auto& [k, v] : comments_) out += "# " + k + "=" + v + "\n";
    out += join(columns_) + "\n";
    for (const auto& r : rows_) out += join(r) + "\n";
    return out;
  }

  void write(const std::filesystem::path& path) const { write_file_atomic(path, str()); }

 private:
  static std::string join(const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) s += ',';
      s += cells[i];
    }
    return s;
  }

  std::vector<std::string> columns_;
  std::vector<std::pair<std::string, std::string>> comments_;
  std::vector<std::vector<std::string>> rows_;
};

/// Value and "defined" flag columns for an optional result; undefined values are written as 0.
inline std::pair<std::string, std::string> optional_cells(const std::optional<double>& v) {
  return v ? std::pair{format_number(*v), std::string("1")} : std::pair{std::string("0"), std::string("0")};
}

}  // namespace wqed::harness
