#include "diagnet/png.hpp"

#include <cstring>
#include <string>

#include <png.h>

namespace diagnet {

namespace {

struct ImageGuard {
  png_image image;
  ImageGuard() {
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
  }
  ~ImageGuard() { png_image_free(&image); }
  ImageGuard(const ImageGuard&) = delete;
  ImageGuard& operator=(const ImageGuard&) = delete;
};

std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  // round(0.299 R + 0.587 G + 0.114 B) in exact integer arithmetic, halves up.
  return static_cast<std::uint8_t>((299u * r + 587u * g + 114u * b + 500u) / 1000u);
}

}  // namespace

std::vector<std::uint8_t> encode_png(const GrayRaster& r) {
  ImageGuard g;
  g.image.width = static_cast<png_uint_32>(r.width());
  g.image.height = static_cast<png_uint_32>(r.height());
  g.image.format = PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  const auto* pixels = r.pixels().data();
  if (!png_image_write_to_memory(&g.image, nullptr, &size, 0, pixels, 0, nullptr)) {
    throw ImageError(std::string("png encode failed: ") + g.image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&g.image, out.data(), &size, 0, pixels, 0, nullptr)) {
    throw ImageError(std::string("png encode failed: ") + g.image.message);
  }
  out.resize(size);
  return out;
}

GrayRaster decode_image(std::span<const std::uint8_t> bytes) {
  ImageGuard g;
  if (bytes.empty() || !png_image_begin_read_from_memory(&g.image, bytes.data(), bytes.size())) {
    throw ImageError(std::string("png decode failed: ") +
                     (bytes.empty() ? "empty input" : g.image.message));
  }
  if (g.image.width == 0 || g.image.height == 0 || g.image.width > (1u << 15) ||
      g.image.height > (1u << 15)) {
    throw ImageError("png decode failed: unsupported image size");
  }
  const bool color = (g.image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  g.image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int w = static_cast<int>(g.image.width);
  const int h = static_cast<int>(g.image.height);
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(g.image));
  if (!png_image_finish_read(&g.image, nullptr, buf.data(), 0, nullptr)) {
    throw ImageError(std::string("png decode failed: ") + g.image.message);
  }
  GrayRaster out(w, h);
  auto px = out.pixels();
  if (color) {
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = luma(buf[3 * i], buf[3 * i + 1], buf[3 * i + 2]);
  } else {
    std::copy(buf.begin(), buf.end(), px.begin());
  }
  return out;
}

}  // namespace diagnet
