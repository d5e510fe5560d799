// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dgflow/mlp.hpp"

namespace dgflow::io {

/// Shortest decimal that round-trips, never more than 17 significant digits.
std::string format_double(double v);

/// Writes a header line followed by one comma-separated row per matrix row.
/// Throws ConfigError if the file cannot be written.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const nn::Matrix& rows);

struct CsvTable {
  std::vector<std::string> header;
  nn::Matrix rows;
};

/// Reads a numeric CSV with a header line. Throws ConfigError on a missing
/// file, ragged rows or unparsable numbers.
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace dgflow::io
