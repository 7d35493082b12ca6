#include "aquagan/tensor.hpp"

namespace aquagan {

std::string to_string(const Shape& s) {
  return std::to_string(s.n) + "x" + std::to_string(s.c) + "x" + std::to_string(s.h) + "x" +
         std::to_string(s.w);
}

Tensor stack_images(std::span<const ImageF* const> images) {
  if (images.empty()) throw DimensionError("cannot stack an empty image list");
  const int h = images.front()->height();
  const int w = images.front()->width();
  Tensor out({static_cast<int>(images.size()), 3, h, w});
  for (std::size_t n = 0; n < images.size(); ++n) {
    const ImageF& img = *images[n];
    if (img.height() != h || img.width() != w) {
      throw DimensionError("cannot stack images of different sizes");
    }
    float* dst = out.sample(static_cast<int>(n));
    auto src = img.values();
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (std::size_t p = 0; p < plane; ++p)
      for (int c = 0; c < 3; ++c) dst[c * plane + p] = src[p * 3 + c];
  }
  return out;
}

Tensor stack_images(std::span<const ImageF> images) {
  std::vector<const ImageF*> ptrs;
  ptrs.reserve(images.size());
  for (const auto& img : images) ptrs.push_back(&img);
  return stack_images(std::span<const ImageF* const>(ptrs));
}

ImageF image_from_tensor(const Tensor& t, int n) {
  const Shape& s = t.shape();
  if (s.c != 3) throw DimensionError("image tensor must have 3 channels, got " + to_string(s));
  if (n < 0 || n >= s.n) throw DimensionError("sample index out of range");
  const std::size_t plane = s.plane();
  std::vector<float> values(plane * 3);
  const float* src = t.sample(n);
  for (std::size_t p = 0; p < plane; ++p)
    for (int c = 0; c < 3; ++c) values[p * 3 + c] = src[c * plane + p];
  return ImageF(s.h, s.w, std::move(values));
}

}  // namespace aquagan
