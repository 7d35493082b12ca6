#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace aquagan {

struct ArtifactEntry {
  std::string path;  // relative to the output directory when possible
  std::string crc32;
  std::uintmax_t bytes = 0;
};

// One per CLI invocation, written as manifest.json next to the outputs.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config = nlohmann::json::object();
  std::map<std::string, std::string> inputs;
  std::string output_dir;
  std::uint64_t seed = 0;
  std::vector<ArtifactEntry> artifacts;
  double duration_s = 0.0;

  nlohmann::json to_json() const;
};

// CRC-32 of a file's bytes, as 8 hex digits.
std::string file_crc32(const std::filesystem::path& path);

// Adds `path` with its checksum; relative to `root` when inside it.
void add_artifact(RunManifest& m, const std::filesystem::path& root,
                  const std::filesystem::path& path);

void write_manifest(const RunManifest& m, const std::filesystem::path& path);

// Flat `key = value` lines, keys sorted; nested objects are dotted.
void write_run_config(const nlohmann::json& config, const std::filesystem::path& path);

}  // namespace aquagan
