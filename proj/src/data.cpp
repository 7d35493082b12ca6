#include "aquagan/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>

#include <json.hpp>

#include "aquagan/errors.hpp"
#include "aquagan/rng.hpp"

namespace fs = std::filesystem;

namespace aquagan {

namespace {

void require_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("missing directory '" + dir.string() + "'");
}

template <typename Sample>
std::vector<Sample> pick_validation(std::vector<Sample> pool, std::size_t count, Rng& rng,
                                    std::vector<Sample>& train) {
  if (count > pool.size()) {
    throw DataError("insufficient samples: requested " + std::to_string(count) +
                    " validation images from a class of " + std::to_string(pool.size()));
  }
  std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<Sample> val(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count));
  train.insert(train.end(), pool.begin() + static_cast<std::ptrdiff_t>(count), pool.end());
  return val;
}

template <typename Sample>
void sort_by_id(std::vector<Sample>& v) {
  std::sort(v.begin(), v.end(), [](const Sample& a, const Sample& b) { return a.id() < b.id(); });
}

}  // namespace

std::string to_string(QualityLabel label) { return label == QualityLabel::kGood ? "good" : "bad"; }

std::string UnpairedSample::id() const { return to_string(label) + "/" + path.filename().string(); }

std::vector<fs::path> list_images(const fs::path& dir) {
  require_dir(dir);
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_supported_image(entry.path())) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  return out;
}

bool has_unpaired_layout(const fs::path& root) {
  return fs::is_directory(root / kGoodDir) && fs::is_directory(root / kBadDir);
}

bool has_paired_layout(const fs::path& root) {
  return fs::is_directory(root / kInputDir) && fs::is_directory(root / kTargetDir);
}

std::vector<UnpairedSample> scan_class(const fs::path& root, QualityLabel label) {
  const fs::path dir = root / to_string(label);
  std::vector<UnpairedSample> out;
  for (auto& p : list_images(dir)) out.push_back({std::move(p), label});
  if (out.empty()) throw DataError("empty class directory '" + dir.string() + "'");
  return out;
}

std::vector<UnpairedSample> scan_unpaired(const fs::path& root) {
  require_dir(root);
  require_dir(root / kGoodDir);
  require_dir(root / kBadDir);
  auto out = scan_class(root, QualityLabel::kBad);
  auto good = scan_class(root, QualityLabel::kGood);
  out.insert(out.end(), good.begin(), good.end());
  sort_by_id(out);
  return out;
}

PairedScan scan_paired(const fs::path& root) {
  require_dir(root);
  const auto inputs = list_images(root / kInputDir);
  const auto targets = list_images(root / kTargetDir);
  std::map<std::string, fs::path> by_stem;
  for (const auto& t : targets) by_stem.emplace(t.stem().string(), t);

  PairedScan scan;
  std::map<std::string, bool> used;
  for (const auto& in : inputs) {
    const std::string stem = in.stem().string();
    auto it = by_stem.find(stem);
    if (it == by_stem.end() || used[stem]) {
      scan.unmatched.push_back(in);
      continue;
    }
    used[stem] = true;
    scan.pairs.push_back({in, it->second, stem});
  }
  for (const auto& [stem, path] : by_stem)
    if (!used[stem]) scan.unmatched.push_back(path);
  if (scan.pairs.empty()) {
    throw DataError("no matched pairs between '" + (root / kInputDir).string() + "' and '" +
                    (root / kTargetDir).string() + "'");
  }
  sort_by_id(scan.pairs);
  return scan;
}

std::size_t SplitSpec::validation_count(std::size_t class_size) const {
  if (count_per_class) return *count_per_class;
  if (!(fraction >= 0.0 && fraction < 1.0)) throw DataError("validation fraction must be in [0,1)");
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(class_size)));
}

Split<UnpairedSample> split(const std::vector<UnpairedSample>& samples, const SplitSpec& spec) {
  Split<UnpairedSample> out;
  Rng rng(splitmix64(spec.seed));
  for (QualityLabel label : {QualityLabel::kBad, QualityLabel::kGood}) {
    std::vector<UnpairedSample> pool;
    for (const auto& s : samples)
      if (s.label == label) pool.push_back(s);
    sort_by_id(pool);
    auto val = pick_validation(pool, spec.validation_count(pool.size()), rng, out.train);
    out.validation.insert(out.validation.end(), val.begin(), val.end());
  }
  sort_by_id(out.train);
  sort_by_id(out.validation);
  return out;
}

Split<SamplePair> split(const std::vector<SamplePair>& samples, const SplitSpec& spec) {
  Split<SamplePair> out;
  Rng rng(splitmix64(spec.seed));
  std::vector<SamplePair> pool = samples;
  sort_by_id(pool);
  out.validation = pick_validation(pool, spec.validation_count(pool.size()), rng, out.train);
  sort_by_id(out.train);
  sort_by_id(out.validation);
  return out;
}

void write_split_json(const fs::path& path, const std::vector<std::string>& train_ids,
                      const std::vector<std::string>& validation_ids, std::uint64_t seed) {
  nlohmann::json j = {{"seed", seed}, {"train", train_ids}, {"validation", validation_ids}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write split listing '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

FlipPlan flip_plan(std::uint64_t seed, std::uint64_t sample_key, std::uint64_t epoch) {
  Rng rng(derive_seed(seed, sample_key, epoch));
  FlipPlan plan;
  plan.horizontal = coin_flip(rng);
  plan.vertical = coin_flip(rng);
  return plan;
}

ImageF apply_flips(const ImageF& img, FlipPlan plan) {
  if (plan.horizontal && plan.vertical) return flip_vertical(flip_horizontal(img));
  if (plan.horizontal) return flip_horizontal(img);
  if (plan.vertical) return flip_vertical(img);
  return img;
}

std::vector<ImageF> augment_flips(std::span<const ImageF> batch, std::uint64_t seed) {
  std::vector<ImageF> out;
  out.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) out.push_back(apply_flips(batch[i], flip_plan(seed, i, 0)));
  return out;
}

std::pair<std::vector<ImageF>, std::vector<ImageF>> augment_flips(std::span<const ImageF> inputs,
                                                                  std::span<const ImageF> targets,
                                                                  std::uint64_t seed) {
  if (inputs.size() != targets.size()) throw DimensionError("paired batch sizes differ");
  std::pair<std::vector<ImageF>, std::vector<ImageF>> out;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const FlipPlan plan = flip_plan(seed, i, 0);
    out.first.push_back(apply_flips(inputs[i], plan));
    out.second.push_back(apply_flips(targets[i], plan));
  }
  return out;
}

ImageF load_resized(const fs::path& path, int size) {
  const char* cache_env = std::getenv("AQUAGAN_CACHE");
  fs::path cache_file;
  if (cache_env && *cache_env) {
    std::error_code ec;
    const auto bytes = fs::file_size(path, ec);
    const auto mtime = ec ? 0 : fs::last_write_time(path, ec).time_since_epoch().count();
    const std::string key = fs::absolute(path).string() + "|" + std::to_string(bytes) + "|" +
                            std::to_string(mtime) + "|" + std::to_string(size);
    char name[32];
    std::snprintf(name, sizeof(name), "%016llx.f32",
                  static_cast<unsigned long long>(stable_hash(key)));
    cache_file = fs::path(cache_env) / name;
    std::ifstream in(cache_file, std::ios::binary);
    if (in) {
      std::vector<float> values(static_cast<std::size_t>(size) * size * 3);
      in.read(reinterpret_cast<char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(float)));
      if (in.gcount() == static_cast<std::streamsize>(values.size() * sizeof(float))) {
        return ImageF(size, size, std::move(values));
      }
    }
  }
  ImageF img = resize_to(decode_image(path), size, size);
  if (!cache_file.empty()) {
    std::error_code ec;
    fs::create_directories(cache_file.parent_path(), ec);
    std::ofstream out(cache_file, std::ios::binary | std::ios::trunc);
    if (out) {
      out.write(reinterpret_cast<const char*>(img.values().data()),
                static_cast<std::streamsize>(img.size() * sizeof(float)));
    }
  }
  return img;
}

LabeledImages load_unpaired(const std::vector<UnpairedSample>& samples, int size) {
  LabeledImages out;
  for (const auto& s : samples) {
    out.ids.push_back(s.id());
    out.images.push_back(load_resized(s.path, size));
    out.labels.push_back(s.label);
  }
  return out;
}

PairedImages load_paired(const std::vector<SamplePair>& pairs, int size) {
  PairedImages out;
  for (const auto& p : pairs) {
    out.ids.push_back(p.stem);
    out.inputs.push_back(load_resized(p.input, size));
    out.targets.push_back(load_resized(p.target, size));
  }
  return out;
}

}  // namespace aquagan
