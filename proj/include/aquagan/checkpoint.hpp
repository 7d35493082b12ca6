#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>

#include <json.hpp>

#include "aquagan/losses.hpp"
#include "aquagan/nets.hpp"
#include "aquagan/params.hpp"

namespace aquagan {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  // Loss variant tag ("L2A", ...) for generators, "classifier" otherwise.
  std::string variant;
  int epoch = 0;
  std::optional<LossWeights> weights;
  // Free-form training configuration (batch size, lr, seed, ...).
  nlohmann::json config = nlohmann::json::object();
};

using NetSpec = std::variant<GeneratorSpec, ClassifierSpec>;

struct Checkpoint {
  NetSpec spec;
  ParamSet params;
  CheckpointMeta meta;
};

// Layout: magic "AQGNCKPT", u32 version, u64 header length, JSON header
// (spec, meta, tensor index), little-endian float32 blobs, CRC-32 trailer
// over everything before it.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Typed loaders; a stored spec that differs from `expected` is a
// CheckpointError. Without `expected`, the stored spec is returned.
Checkpoint load_generator(const std::filesystem::path& path,
                          const std::optional<GeneratorSpec>& expected = std::nullopt);
Checkpoint load_classifier(const std::filesystem::path& path,
                           const std::optional<ClassifierSpec>& expected = std::nullopt);

void to_json(nlohmann::json& j, const GeneratorSpec& s);
void from_json(const nlohmann::json& j, GeneratorSpec& s);
void to_json(nlohmann::json& j, const ClassifierSpec& s);
void from_json(const nlohmann::json& j, ClassifierSpec& s);
// Absent lambdas serialize as absent keys.
void to_json(nlohmann::json& j, const LossWeights& w);
void from_json(const nlohmann::json& j, LossWeights& w);

}  // namespace aquagan
