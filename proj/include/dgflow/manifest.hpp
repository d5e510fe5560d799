// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dgflow/models.hpp"

namespace dgflow::manifest {

using models::Json;

/// Lower-case hex SHA-256 of a file's bytes. Throws ConfigError if unreadable.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_bytes(const std::string& bytes);

struct FileRecord {
  std::string path;  // relative to the manifest directory when inside it
  std::string sha256;
};

struct RunManifest {
  std::string command;
  Json config = Json::object();
  Json seeds = Json::object();
  std::vector<FileRecord> inputs;
  std::vector<FileRecord> outputs;
  Json metrics = Json::object();
  Json timings = Json::object();

  /// Hashes `file` and appends it; `base` is the directory the manifest lives in.
  void add_input(const std::filesystem::path& file, const std::filesystem::path& base);
  void add_output(const std::filesystem::path& file, const std::filesystem::path& base);

  Json to_json() const;
  static RunManifest from_json(const Json& j);

  void save(const std::filesystem::path& path) const;
  static RunManifest load(const std::filesystem::path& path);
};

struct VerifyReport {
  std::size_t checked = 0;
  std::vector<std::string> problems;  // one line per missing or changed file

  bool ok() const { return problems.empty(); }
};

/// Re-hashes every input and output listed in the manifest at `path`.
VerifyReport verify(const std::filesystem::path& path);

}  // namespace dgflow::manifest
