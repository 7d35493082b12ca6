#pragma once

#include <string>
#include <vector>

#include "aquagan/image.hpp"

namespace aquagan::cli {

struct GridTile {
  std::string label;
  ImageU8 image;
};

// Horizontal strip: every tile scaled to `tile_height` (aspect kept) with its
// label drawn in a band above it, tiles in the given order.
ImageU8 compose_strip(const std::vector<GridTile>& tiles, int tile_height);

}  // namespace aquagan::cli
