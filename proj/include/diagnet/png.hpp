#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "diagnet/raster.hpp"

namespace diagnet {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 8-bit grayscale, non-interlaced PNG.
std::vector<std::uint8_t> encode_png(const GrayRaster& r);

/// Decodes an 8-bit grayscale or RGB PNG. Color pixels are reduced with the
/// integer luma round(0.299 R + 0.587 G + 0.114 B). Throws ImageError.
GrayRaster decode_image(std::span<const std::uint8_t> bytes);

}  // namespace diagnet
