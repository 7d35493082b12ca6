#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aquagan/image.hpp"

// Dataset layouts:
//   unpaired: <root>/good/*, <root>/bad/*      (label from directory)
//   paired:   <root>/trainA/* (low quality), <root>/trainB/* (reference),
//             matched by file stem.
namespace aquagan {

enum class QualityLabel { kGood, kBad };

std::string to_string(QualityLabel label);

struct UnpairedSample {
  std::filesystem::path path;
  QualityLabel label = QualityLabel::kGood;

  // "<good|bad>/<filename>", unique within a root.
  std::string id() const;
};

struct SamplePair {
  std::filesystem::path input;
  std::filesystem::path target;
  std::string stem;

  const std::string& id() const { return stem; }
};

struct PairedScan {
  std::vector<SamplePair> pairs;
  // Files present on only one side.
  std::vector<std::filesystem::path> unmatched;
};

inline constexpr const char* kGoodDir = "good";
inline constexpr const char* kBadDir = "bad";
inline constexpr const char* kInputDir = "trainA";
inline constexpr const char* kTargetDir = "trainB";

bool has_unpaired_layout(const std::filesystem::path& root);
bool has_paired_layout(const std::filesystem::path& root);

// Sorted by (label, filename). Missing directory or empty class -> DataError.
std::vector<UnpairedSample> scan_unpaired(const std::filesystem::path& root);
// Just one class directory (e.g. bad/ for unpaired generator training).
std::vector<UnpairedSample> scan_class(const std::filesystem::path& root, QualityLabel label);
// Sorted by stem. Zero matched pairs -> DataError.
PairedScan scan_paired(const std::filesystem::path& root);

// Supported image files of one directory, sorted by filename.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

struct SplitSpec {
  std::uint64_t seed = 0;
  // Validation images per class; takes precedence over the fraction.
  std::optional<std::size_t> count_per_class;
  double fraction = 0.14;

  std::size_t validation_count(std::size_t class_size) const;
};

template <typename Sample>
struct Split {
  std::vector<Sample> train;
  std::vector<Sample> validation;
};

// Class-stratified, seed-deterministic, disjoint.
Split<UnpairedSample> split(const std::vector<UnpairedSample>& samples, const SplitSpec& spec);
Split<SamplePair> split(const std::vector<SamplePair>& samples, const SplitSpec& spec);

// Persisted split listing (ids only).
void write_split_json(const std::filesystem::path& path, const std::vector<std::string>& train_ids,
                      const std::vector<std::string>& validation_ids, std::uint64_t seed);

struct FlipPlan {
  bool horizontal = false;
  bool vertical = false;
};

// p = 0.5 per axis, a pure function of (seed, sample key, epoch).
FlipPlan flip_plan(std::uint64_t seed, std::uint64_t sample_key, std::uint64_t epoch);
ImageF apply_flips(const ImageF& img, FlipPlan plan);

// Independent flips per image; image i uses key i.
std::vector<ImageF> augment_flips(std::span<const ImageF> batch, std::uint64_t seed);
// Input and target of each pair receive the same flips.
std::pair<std::vector<ImageF>, std::vector<ImageF>> augment_flips(std::span<const ImageF> inputs,
                                                                  std::span<const ImageF> targets,
                                                                  std::uint64_t seed);

// Decoded and resized to size x size. When AQUAGAN_CACHE names a directory,
// results are cached there keyed by path, file size, mtime and target size.
ImageF load_resized(const std::filesystem::path& path, int size);

struct LabeledImages {
  std::vector<std::string> ids;
  std::vector<ImageF> images;
  std::vector<QualityLabel> labels;

  std::size_t size() const { return images.size(); }
};

struct PairedImages {
  std::vector<std::string> ids;
  std::vector<ImageF> inputs;
  std::vector<ImageF> targets;

  std::size_t size() const { return inputs.size(); }
};

LabeledImages load_unpaired(const std::vector<UnpairedSample>& samples, int size);
PairedImages load_paired(const std::vector<SamplePair>& pairs, int size);

}  // namespace aquagan
