#pragma once
// Output plumbing: CSV and JSON emitters. Every file starts with (or contains)
// the resolved config hash so results can be traced back to the exact run.
// Numbers are printed with %.17g so reruns are byte-comparable.

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "config.hpp"

namespace hiercan {

inline std::string fmt_g17(double v) { return detail::fmt_num(v); }

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> cells) {
    if (cells.size() != header.size())
      throw std::logic_error("table row width mismatch");
    rows.push_back(std::move(cells));
  }
};

inline std::string csv_string(const Table& t, const std::string& hash_hex) {
  std::string out = "# config_hash=" + hash_hex + "\n";
  for (size_t i = 0; i < t.header.size(); ++i) {
    if (i) out += ",";
    out += t.header[i];
  }
  out += "\n";
  for (auto& row : t.rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out += ",";
      out += row[i];
    }
    out += "\n";
  }
  return out;
}

// tabular data under the same stringification as the CSV path, plus the hash
inline nlohmann::json table_json(const Table& t) {
  nlohmann::json j;
  j["columns"] = t.header;
  auto rows = nlohmann::json::array();
  for (auto& row : t.rows) rows.push_back(row);
  j["rows"] = rows;
  return j;
}

inline std::string json_string(nlohmann::json j, const std::string& hash_hex) {
  j["config_hash"] = hash_hex;
  return j.dump(2) + "\n";
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace hiercan
