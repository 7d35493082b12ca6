#include "aquagan/manifest.hpp"

#include <fstream>
#include <vector>

#include "aquagan/errors.hpp"
#include "aquagan/params.hpp"

namespace fs = std::filesystem;

namespace aquagan {

namespace {

void flatten(const nlohmann::json& j, const std::string& prefix,
             std::map<std::string, std::string>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    return;
  }
  out[prefix] = j.is_string() ? j.get<std::string>() : j.dump();
}

}  // namespace

nlohmann::json RunManifest::to_json() const {
  nlohmann::json arts = nlohmann::json::array();
  for (const auto& a : artifacts) arts.push_back({{"path", a.path}, {"crc32", a.crc32}, {"bytes", a.bytes}});
  return {{"command", command},   {"argv", argv},         {"config", config},
          {"inputs", inputs},     {"output_dir", output_dir}, {"seed", seed},
          {"artifacts", arts},    {"duration_s", duration_s}};
}

std::string file_crc32(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  std::uint32_t crc = 0;
  std::vector<std::uint8_t> buf(1 << 16);
  while (in) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    const auto got = static_cast<std::size_t>(in.gcount());
    if (got == 0) break;
    crc = crc32_bytes(std::span<const std::uint8_t>(buf.data(), got), crc);
  }
  return hex32(crc);
}

void add_artifact(RunManifest& m, const fs::path& root, const fs::path& path) {
  ArtifactEntry e;
  const fs::path rel = path.lexically_relative(root);
  e.path = (!rel.empty() && *rel.begin() != "..") ? rel.generic_string() : path.generic_string();
  e.crc32 = file_crc32(path);
  e.bytes = fs::file_size(path);
  m.artifacts.push_back(std::move(e));
}

void write_manifest(const RunManifest& m, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest '" + path.string() + "'");
  out << m.to_json().dump(2) << '\n';
}

void write_run_config(const nlohmann::json& config, const fs::path& path) {
  std::map<std::string, std::string> flat;
  flatten(config, "", flat);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write run config '" + path.string() + "'");
  for (const auto& [k, v] : flat) out << k << " = " << v << '\n';
}

}  // namespace aquagan
