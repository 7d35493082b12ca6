#include "synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "aquagan/rng.hpp"

namespace fs = std::filesystem;
using aquagan::ImageF;

namespace synth {

ImageF textured(int size, std::uint64_t seed) {
  aquagan::Rng rng(aquagan::splitmix64(seed));
  double base[3], gx[3], gy[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = 0.25 + 0.5 * aquagan::uniform01(rng);
    gx[c] = 0.4 * (aquagan::uniform01(rng) - 0.5);
    gy[c] = 0.4 * (aquagan::uniform01(rng) - 0.5);
  }
  const double fx = 2.0 + 6.0 * aquagan::uniform01(rng);
  const double fy = 2.0 + 6.0 * aquagan::uniform01(rng);
  ImageF img(size, size, 0.0f);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double u = static_cast<double>(x) / size;
      const double v = static_cast<double>(y) / size;
      const double wave = 0.12 * std::sin(6.2831853 * fx * u) * std::cos(6.2831853 * fy * v);
      for (int c = 0; c < 3; ++c) {
        const double noise = 0.08 * (aquagan::uniform01(rng) - 0.5);
        img.set(y, x, c, static_cast<float>(base[c] + gx[c] * (u - 0.5) + gy[c] * (v - 0.5) +
                                            wave + noise));
      }
    }
  }
  return img;
}

ImageF sharp_scene(int size, std::uint64_t seed) {
  ImageF img = textured(size, seed);
  aquagan::Rng rng(aquagan::splitmix64(seed ^ 0x5eedULL));
  for (int k = 0; k < 12; ++k) {
    const int y0 = static_cast<int>(aquagan::uniform01(rng) * size);
    const int x0 = static_cast<int>(aquagan::uniform01(rng) * size);
    const int hh = 4 + static_cast<int>(aquagan::uniform01(rng) * size / 3);
    const int ww = 4 + static_cast<int>(aquagan::uniform01(rng) * size / 3);
    double col[3];
    for (double& c : col) c = 0.15 + 0.7 * aquagan::uniform01(rng);
    for (int y = y0; y < std::min(size, y0 + hh); ++y)
      for (int x = x0; x < std::min(size, x0 + ww); ++x)
        for (int c = 0; c < 3; ++c)
          img.set(y, x, c, static_cast<float>(col[c] + 0.05 * (aquagan::uniform01(rng) - 0.5)));
  }
  return img;
}

ImageF blurred(const ImageF& img, int radius) {
  const int h = img.height(), w = img.width();
  ImageF tmp(h, w, 0.0f), out(h, w, 0.0f);
  const double norm = 1.0 / (2 * radius + 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int d = -radius; d <= radius; ++d) s += img.at(y, std::clamp(x + d, 0, w - 1), c);
        tmp.set(y, x, c, static_cast<float>(s * norm));
      }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int d = -radius; d <= radius; ++d) s += tmp.at(std::clamp(y + d, 0, h - 1), x, c);
        out.set(y, x, c, static_cast<float>(s * norm));
      }
  return out;
}

ImageF degrade(const ImageF& img) {
  const ImageF soft = blurred(img, 1);
  ImageF out(img.height(), img.width(), 0.0f);
  const double gain[3] = {0.55, 0.85, 0.9};
  const double lift[3] = {0.05, 0.12, 0.18};
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c)
        out.set(y, x, c, static_cast<float>(lift[c] + gain[c] * (0.5 + 0.7 * (soft.at(y, x, c) - 0.5))));
  return out;
}

ImageF scene(int size, std::uint64_t seed, bool tinted) {
  ImageF img = textured(size, seed);
  if (!tinted) {
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        const double g = (img.at(y, x, 0) + img.at(y, x, 1) + img.at(y, x, 2)) / 3.0;
        for (int c = 0; c < 3; ++c) img.set(y, x, c, static_cast<float>(0.5 * g + 0.5 * img.at(y, x, c)));
      }
    return img;
  }
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      img.set(y, x, 0, 0.35f * img.at(y, x, 0));
      img.set(y, x, 1, 0.2f + 0.7f * img.at(y, x, 1));
      img.set(y, x, 2, 0.35f + 0.65f * img.at(y, x, 2));
    }
  return img;
}

aquagan::LabeledImages tint_dataset(int per_class, int size, std::uint64_t seed) {
  aquagan::LabeledImages out;
  for (int i = 0; i < 2 * per_class; ++i) {
    const bool bad = i % 2 == 1;
    out.ids.push_back(std::string(bad ? "bad/" : "good/") + std::to_string(i / 2));
    out.images.push_back(scene(size, aquagan::derive_seed(seed, static_cast<std::uint64_t>(i), 1), bad));
    out.labels.push_back(bad ? aquagan::QualityLabel::kBad : aquagan::QualityLabel::kGood);
  }
  return out;
}

aquagan::PairedImages paired_set(int count, int size, std::uint64_t seed) {
  aquagan::PairedImages out;
  for (int i = 0; i < count; ++i) {
    ImageF clean = textured(size, aquagan::derive_seed(seed, static_cast<std::uint64_t>(i), 2));
    out.ids.push_back("pair" + std::to_string(i));
    out.inputs.push_back(degrade(clean));
    out.targets.push_back(std::move(clean));
  }
  return out;
}

aquagan::TensorD random_tensor(aquagan::Shape shape, std::uint64_t seed, double lo, double hi) {
  aquagan::TensorD t(shape);
  aquagan::Rng rng(aquagan::splitmix64(seed));
  for (double& v : t.values()) v = lo + (hi - lo) * aquagan::uniform01(rng);
  return t;
}

void write_unpaired_tree(const fs::path& root, int per_class, int size, std::uint64_t seed) {
  fs::create_directories(root / "good");
  fs::create_directories(root / "bad");
  const auto set = tint_dataset(per_class, size, seed);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const bool bad = set.labels[i] == aquagan::QualityLabel::kBad;
    const fs::path dir = root / (bad ? "bad" : "good");
    aquagan::encode_image(set.images[i], dir / ("img" + std::to_string(i / 2 + 100) + ".png"));
  }
}

void write_paired_tree(const fs::path& root, int count, int size, std::uint64_t seed) {
  fs::create_directories(root / "trainA");
  fs::create_directories(root / "trainB");
  const auto set = paired_set(count, size, seed);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const std::string name = "s" + std::to_string(i + 10) + ".png";
    aquagan::encode_image(set.inputs[i], root / "trainA" / name);
    aquagan::encode_image(set.targets[i], root / "trainB" / name);
  }
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("aquagan_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace synth
