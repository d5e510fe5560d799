// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#include "dgflow/csv.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "dgflow/errors.hpp"

namespace dgflow::io {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const nn::Matrix& rows) {
  if (!header.empty() && static_cast<Eigen::Index>(header.size()) != rows.cols())
    throw ConfigError("CSV header has " + std::to_string(header.size()) + " names for " +
                      std::to_string(rows.cols()) + " columns");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  std::string line;
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    line.clear();
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
      if (c) line += ',';
      line += format_double(rows(r, c));
    }
    line += '\n';
    out << line;
  }
  if (!out) throw ConfigError("write to '" + path.string() + "' failed");
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      parts.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  parts.push_back(cur);
  return parts;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("'" + path.string() + "' is empty");
  t.header = split(line);
  const std::size_t cols = t.header.size();
  std::vector<double> values;
  std::size_t nrows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto parts = split(line);
    if (parts.size() != cols)
      throw ConfigError("'" + path.string() + "' row " + std::to_string(nrows + 1) + " has " +
                        std::to_string(parts.size()) + " fields, expected " +
                        std::to_string(cols));
    for (const auto& p : parts) {
      double v = 0.0;
      const auto res = std::from_chars(p.data(), p.data() + p.size(), v);
      if (res.ec != std::errc() || res.ptr != p.data() + p.size())
        throw ConfigError("'" + path.string() + "' row " + std::to_string(nrows + 1) +
                          ": cannot parse '" + p + "'");
      values.push_back(v);
    }
    ++nrows;
  }
  t.rows.resize(static_cast<Eigen::Index>(nrows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < values.size(); ++i)
    t.rows(static_cast<Eigen::Index>(i / cols), static_cast<Eigen::Index>(i % cols)) = values[i];
  return t;
}

}  // namespace dgflow::io
