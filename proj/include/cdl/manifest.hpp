#pragma once

// Run manifests: what a command read, with which configuration and seed, and
// what it wrote.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "cdl/config.hpp"

namespace cdl {

/// Library version with the git description it was built from.
const char* version_string() noexcept;

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  std::string version = version_string();
  std::uint64_t seed = 0;
  Config config;
  std::vector<std::pair<std::string, std::string>> inputs;  // (path, digest)
  std::vector<std::string> outputs;

  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);

  void write(const std::filesystem::path& path) const;
  static RunManifest read(const std::filesystem::path& path);
};

}  // namespace cdl
