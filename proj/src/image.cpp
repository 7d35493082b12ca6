#include "aquagan/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "aquagan/errors.hpp"

namespace aquagan {

namespace {

void check_side(int height, int width) {
  if (height < ImageF::kMinSide || width < ImageF::kMinSide) {
    throw DimensionError("image must be at least 2x2, got " + std::to_string(height) + "x" +
                         std::to_string(width));
  }
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

}  // namespace

float ImageF::clamp_unit(float v) {
  if (std::isnan(v)) return 0.0f;
  return std::clamp(v, 0.0f, 1.0f);
}

ImageF::ImageF(int height, int width, float fill)
    : height_(height), width_(width) {
  check_side(height, width);
  data_.assign(static_cast<std::size_t>(height) * width * kChannels, clamp_unit(fill));
}

ImageF::ImageF(int height, int width, std::vector<float> values)
    : height_(height), width_(width), data_(std::move(values)) {
  check_side(height, width);
  if (data_.size() != static_cast<std::size_t>(height) * width * kChannels) {
    throw DimensionError("value count does not match " + std::to_string(height) + "x" +
                         std::to_string(width) + "x3");
  }
  for (float& v : data_) v = clamp_unit(v);
}

ImageU8::ImageU8(int height, int width, std::vector<std::uint8_t> values)
    : height_(height), width_(width), data_(std::move(values)) {
  check_side(height, width);
  if (data_.size() != static_cast<std::size_t>(height) * width * 3) {
    throw DimensionError("value count does not match image shape");
  }
}

bool is_supported_image(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

ImageU8 decode_image_u8(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw DecodeError("cannot read image '" + path.string() + "': no such file");
  }
  // IMREAD_COLOR replicates grayscale and drops alpha; 16-bit is scaled to 8-bit.
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) {
    throw DecodeError("cannot decode image '" + path.string() + "'");
  }
  if (bgr.channels() != 3) {
    throw DecodeError("image '" + path.string() + "' has " + std::to_string(bgr.channels()) +
                      " channels after conversion, expected 3");
  }
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  std::vector<std::uint8_t> values(rgb.total() * 3);
  for (int y = 0; y < rgb.rows; ++y) {
    const auto* row = rgb.ptr<std::uint8_t>(y);
    std::copy(row, row + rgb.cols * 3, values.begin() + static_cast<std::ptrdiff_t>(y) * rgb.cols * 3);
  }
  try {
    return ImageU8(rgb.rows, rgb.cols, std::move(values));
  } catch (const DimensionError& e) {
    throw DecodeError("image '" + path.string() + "': " + e.what());
  }
}

ImageF decode_image(const std::filesystem::path& path) {
  return to_float(decode_image_u8(path));
}

void encode_image(const ImageU8& img, const std::filesystem::path& path) {
  cv::Mat rgb(img.height(), img.width(), CV_8UC3,
              const_cast<std::uint8_t*>(img.values().data()));
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  std::vector<int> params;
  const std::string ext = lower_extension(path);
  if (ext == ".jpg" || ext == ".jpeg") {
    params = {cv::IMWRITE_JPEG_QUALITY, 95};
  } else if (ext == ".png") {
    params = {cv::IMWRITE_PNG_COMPRESSION, 6};
  } else {
    throw Error("unsupported output format '" + ext + "' for " + path.string());
  }
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), bgr, params);
  } catch (const cv::Exception& e) {
    throw Error("cannot write image '" + path.string() + "': " + e.what());
  }
  if (!ok) throw Error("cannot write image '" + path.string() + "'");
}

void encode_image(const ImageF& img, const std::filesystem::path& path) {
  encode_image(quantize(img), path);
}

ImageU8 quantize(const ImageF& img) {
  std::vector<std::uint8_t> out(img.size());
  auto src = img.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = std::round(static_cast<double>(src[i]) * 255.0);
    out[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
  }
  return ImageU8(img.height(), img.width(), std::move(out));
}

ImageF to_float(const ImageU8& img) {
  std::vector<float> out(img.values().size());
  auto src = img.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(src[i]) / 255.0f;
  return ImageF(img.height(), img.width(), std::move(out));
}

ImageF resize_to(const ImageF& img, int height, int width) {
  check_side(height, width);
  if (height == img.height() && width == img.width()) return img;

  struct Tap {
    int lo;
    int hi;
    double frac;
  };
  auto taps = [](int dst, int src) {
    std::vector<Tap> out(dst);
    const double scale = static_cast<double>(src) / dst;
    for (int i = 0; i < dst; ++i) {
      double s = (i + 0.5) * scale - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(src - 1));
      const int lo = static_cast<int>(std::floor(s));
      const int hi = std::min(lo + 1, src - 1);
      out[i] = {lo, hi, s - lo};
    }
    return out;
  };
  const auto ty = taps(height, img.height());
  const auto tx = taps(width, img.width());

  std::vector<float> out(static_cast<std::size_t>(height) * width * 3);
  for (int y = 0; y < height; ++y) {
    const Tap& a = ty[y];
    for (int x = 0; x < width; ++x) {
      const Tap& b = tx[x];
      for (int c = 0; c < 3; ++c) {
        const double top = img.at(a.lo, b.lo, c) * (1.0 - b.frac) + img.at(a.lo, b.hi, c) * b.frac;
        const double bot = img.at(a.hi, b.lo, c) * (1.0 - b.frac) + img.at(a.hi, b.hi, c) * b.frac;
        out[(static_cast<std::size_t>(y) * width + x) * 3 + c] =
            static_cast<float>(top * (1.0 - a.frac) + bot * a.frac);
      }
    }
  }
  return ImageF(height, width, std::move(out));
}

ImageF flip_horizontal(const ImageF& img) {
  ImageF out(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) out.set(y, img.width() - 1 - x, c, img.at(y, x, c));
  return out;
}

ImageF flip_vertical(const ImageF& img) {
  ImageF out(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) out.set(img.height() - 1 - y, x, c, img.at(y, x, c));
  return out;
}

}  // namespace aquagan
