#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aquagan/data.hpp"
#include "aquagan/image.hpp"
#include "aquagan/tensor.hpp"

namespace synth {

// Smooth colour field with fine noise texture; never flat.
aquagan::ImageF textured(int size, std::uint64_t seed);

// Hard-edged rectangles over the textured field; colours kept in [0.15, 0.85].
aquagan::ImageF sharp_scene(int size, std::uint64_t seed);

// Box blur of the given radius, edge-replicated.
aquagan::ImageF blurred(const aquagan::ImageF& img, int radius);

// Underwater-style degradation: blue-green cast, reduced contrast, blur.
aquagan::ImageF degrade(const aquagan::ImageF& img);

// Neutral scene (good) or strong blue tint (bad).
aquagan::ImageF scene(int size, std::uint64_t seed, bool tinted);

aquagan::LabeledImages tint_dataset(int per_class, int size, std::uint64_t seed);

// Degraded input and clean target per pair.
aquagan::PairedImages paired_set(int count, int size, std::uint64_t seed);

aquagan::TensorD random_tensor(aquagan::Shape shape, std::uint64_t seed, double lo, double hi);

void write_unpaired_tree(const std::filesystem::path& root, int per_class, int size,
                         std::uint64_t seed);
void write_paired_tree(const std::filesystem::path& root, int count, int size, std::uint64_t seed);

// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

}  // namespace synth
