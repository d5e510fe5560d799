// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#include "dgflow/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>

#include "dgflow/errors.hpp"

namespace dgflow::manifest {

namespace fs = std::filesystem;

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
      throw std::runtime_error("SHA-256 initialisation failed");
  }
  void update(const char* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw std::runtime_error("SHA-256 update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1)
      throw std::runtime_error("SHA-256 finalisation failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out.push_back(kHex[md[i] >> 4]);
      out.push_back(kHex[md[i] & 0xf]);
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

std::string display_path(const fs::path& file, const fs::path& base) {
  const fs::path abs_file = fs::weakly_canonical(fs::absolute(file));
  const fs::path abs_base = fs::weakly_canonical(fs::absolute(base.empty() ? fs::path(".") : base));
  const fs::path rel = abs_file.lexically_relative(abs_base);
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return abs_file.generic_string();
}

Json records_to_json(const std::vector<FileRecord>& recs) {
  Json a = Json::array();
  for (const auto& r : recs) a.push_back({{"path", r.path}, {"sha256", r.sha256}});
  return a;
}

std::vector<FileRecord> records_from_json(const Json& j) {
  std::vector<FileRecord> out;
  for (const auto& e : j) out.push_back({e.at("path").get<std::string>(), e.at("sha256").get<std::string>()});
  return out;
}

}  // namespace

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  Sha256 h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::string sha256_bytes(const std::string& bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

void RunManifest::add_input(const fs::path& file, const fs::path& base) {
  inputs.push_back({display_path(file, base), sha256_file(file)});
}

void RunManifest::add_output(const fs::path& file, const fs::path& base) {
  outputs.push_back({display_path(file, base), sha256_file(file)});
}

Json RunManifest::to_json() const {
  return {{"command", command},         {"config", config},
          {"seeds", seeds},             {"inputs", records_to_json(inputs)},
          {"outputs", records_to_json(outputs)}, {"metrics", metrics},
          {"timings", timings}};
}

RunManifest RunManifest::from_json(const Json& j) {
  try {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.config = j.at("config");
    m.seeds = j.at("seeds");
    m.inputs = records_from_json(j.at("inputs"));
    m.outputs = records_from_json(j.at("outputs"));
    m.metrics = j.value("metrics", Json::object());
    m.timings = j.value("timings", Json::object());
    return m;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
}

void RunManifest::save(const fs::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
  out << to_json().dump(2) << '\n';
}

RunManifest RunManifest::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read manifest '" + path.string() + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("manifest '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return from_json(j);
}

VerifyReport verify(const fs::path& path) {
  const RunManifest m = RunManifest::load(path);
  const fs::path base = path.parent_path();
  VerifyReport rep;
  auto check = [&](const FileRecord& r, const char* role) {
    ++rep.checked;
    fs::path p(r.path);
    if (p.is_relative()) p = base / p;
    if (!fs::exists(p)) {
      rep.problems.push_back(std::string(role) + " missing: " + r.path);
      return;
    }
    const std::string h = sha256_file(p);
    if (h != r.sha256)
      rep.problems.push_back(std::string(role) + " changed: " + r.path + " (expected " + r.sha256 +
                             ", found " + h + ")");
  };
  for (const auto& r : m.inputs) check(r, "input");
  for (const auto& r : m.outputs) check(r, "output");
  return rep;
}

}  // namespace dgflow::manifest
