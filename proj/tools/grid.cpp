#include "grid.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgproc.hpp>

namespace aquagan::cli {

namespace {

constexpr int kBand = 24;
constexpr int kGap = 4;

cv::Mat to_mat(const ImageU8& img) {
  cv::Mat m(img.height(), img.width(), CV_8UC3);
  std::copy(img.values().begin(), img.values().end(), m.data);
  return m;
}

}  // namespace

ImageU8 compose_strip(const std::vector<GridTile>& tiles, int tile_height) {
  std::vector<cv::Mat> scaled;
  int width = 0;
  for (const auto& t : tiles) {
    const int w = std::max(1, static_cast<int>(std::lround(static_cast<double>(t.image.width()) *
                                                           tile_height / t.image.height())));
    cv::Mat m;
    cv::resize(to_mat(t.image), m, cv::Size(w, tile_height), 0, 0, cv::INTER_AREA);
    width += w;
    scaled.push_back(std::move(m));
  }
  width += kGap * static_cast<int>(tiles.size() > 0 ? tiles.size() - 1 : 0);
  cv::Mat canvas(tile_height + kBand, std::max(width, 2), CV_8UC3, cv::Scalar(255, 255, 255));
  int x = 0;
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    scaled[i].copyTo(canvas(cv::Rect(x, kBand, scaled[i].cols, tile_height)));
    cv::putText(canvas, tiles[i].label, cv::Point(x + 3, kBand - 7), cv::FONT_HERSHEY_SIMPLEX, 0.5,
                cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
    x += scaled[i].cols + kGap;
  }
  std::vector<std::uint8_t> values(canvas.data, canvas.data + canvas.total() * 3);
  return ImageU8(canvas.rows, canvas.cols, std::move(values));
}

}  // namespace aquagan::cli
