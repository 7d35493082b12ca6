#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace aquagan {

// RGB image with real values in [0,1], row-major H x W x 3.
// Every writer clamps, so the range invariant holds for any instance.
class ImageF {
 public:
  static constexpr int kChannels = 3;
  static constexpr int kMinSide = 2;

  ImageF(int height, int width, float fill = 0.0f);
  // Values are clamped to [0,1]; NaN becomes 0.
  ImageF(int height, int width, std::vector<float> values);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return kChannels; }
  std::size_t size() const { return data_.size(); }

  float at(int y, int x, int c) const { return data_[index(y, x, c)]; }
  void set(int y, int x, int c, float v) { data_[index(y, x, c)] = clamp_unit(v); }

  std::span<const float> values() const { return data_; }

  friend bool operator==(const ImageF&, const ImageF&) = default;

  static float clamp_unit(float v);

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
  }

  int height_;
  int width_;
  std::vector<float> data_;
};

// 8-bit RGB image, same layout as ImageF. File I/O representation.
class ImageU8 {
 public:
  ImageU8(int height, int width, std::vector<std::uint8_t> values);

  int height() const { return height_; }
  int width() const { return width_; }
  std::uint8_t at(int y, int x, int c) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
  }
  std::span<const std::uint8_t> values() const { return data_; }

  friend bool operator==(const ImageU8&, const ImageU8&) = default;

 private:
  int height_;
  int width_;
  std::vector<std::uint8_t> data_;
};

// Raw 8-bit values divided by 255; no color normalization. Grayscale input
// is replicated to three channels, alpha is dropped.
ImageF decode_image(const std::filesystem::path& path);
ImageU8 decode_image_u8(const std::filesystem::path& path);

// Format follows the extension (.png, .jpg/.jpeg).
void encode_image(const ImageU8& img, const std::filesystem::path& path);
void encode_image(const ImageF& img, const std::filesystem::path& path);

// round(v * 255), clamped to [0,255].
ImageU8 quantize(const ImageF& img);
ImageF to_float(const ImageU8& img);

// Bilinear resampling with pixel centers at half-integer coordinates
// (align-corners false). Same-size calls return an exact copy.
ImageF resize_to(const ImageF& img, int height, int width);

ImageF flip_horizontal(const ImageF& img);
ImageF flip_vertical(const ImageF& img);

bool is_supported_image(const std::filesystem::path& path);

}  // namespace aquagan
