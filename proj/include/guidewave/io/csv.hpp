#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "guidewave/error.hpp"

namespace guidewave::io {

/// Column-oriented table written as CSV: `#` metadata lines, one header line,
/// then rows with every value printed as %.17g.
struct CsvTable {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  CsvTable& meta(std::string key, std::string value) {
    metadata.emplace_back(std::move(key), std::move(value));
    return *this;
  }

  CsvTable& column(std::string name, std::vector<double> values) {
    require(columns.empty() || values.size() == columns.front().size(), ErrorCode::invalid_parameter,
            "CSV column '" + name + "' has a different length");
    header.push_back(std::move(name));
    columns.push_back(std::move(values));
    return *this;
  }

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }

  std::string str() const {
    std::string out;
    for (const auto& [k, v] : metadata) out += "# " + k + ": " + v + "\n";
    for (std::size_t c = 0; c < header.size(); ++c) out += (c ? "," : "") + header[c];
    out += "\n";
    char buf[40];
    for (std::size_t r = 0; r < rows(); ++r) {
      for (std::size_t c = 0; c < columns.size(); ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", columns[c][r]);
        if (c) out += ',';
        out += buf;
      }
      out += '\n';
    }
    return out;
  }
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  require(bool(f), ErrorCode::io, "cannot open '" + path.string() + "' for writing");
  f << text;
  require(bool(f), ErrorCode::io, "write to '" + path.string() + "' failed");
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  require(bool(f), ErrorCode::io, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

/// Parses a table written by CsvTable::str (metadata lines are skipped).
inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(": ");
      if (colon != std::string::npos) t.metadata.emplace_back(line.substr(2, colon - 2), line.substr(colon + 2));
      continue;
    }
    std::vector<std::string> cells;
    std::size_t a = 0;
    for (;;) {
      const std::size_t b = line.find(',', a);
      cells.push_back(line.substr(a, b == std::string::npos ? std::string::npos : b - a));
      if (b == std::string::npos) break;
      a = b + 1;
    }
    if (!have_header) {
      t.header = cells;
      t.columns.assign(cells.size(), {});
      have_header = true;
      continue;
    }
    require(cells.size() == t.header.size(), ErrorCode::io, "CSV row has the wrong number of cells");
    for (std::size_t c = 0; c < cells.size(); ++c) t.columns[c].push_back(std::stod(cells[c]));
  }
  return t;
}

}  // namespace guidewave::io
