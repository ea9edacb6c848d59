#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "diagnet/tensor.hpp"

namespace diagnet {

inline constexpr std::uint8_t kInk = 255;

/// Single-channel 8-bit image, row-major, background 0 and ink 255.
class GrayRaster {
 public:
  /// Throws std::invalid_argument if either side is zero or negative.
  GrayRaster(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  std::uint8_t at(int x, int y) const { return pixels_[index(x, y)]; }
  void set(int x, int y, std::uint8_t v) { pixels_[index(x, y)] = v; }

  std::span<std::uint8_t> pixels() { return pixels_; }
  std::span<const std::uint8_t> pixels() const { return pixels_; }

  /// Number of non-zero pixels.
  std::size_t ink_count() const;

  bool operator==(const GrayRaster&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> pixels_;
};

struct Point {
  double x = 0;
  double y = 0;
  bool operator==(const Point&) const = default;
};

// Drawing primitives. All write exactly kInk, test pixel centers
// (px + 0.5, py + 0.5), clip to the canvas and never clear a pixel.

/// Disc of the given radius; radii below 0.75 are raised to 0.75.
void fill_circle(GrayRaster& r, double cx, double cy, double radius);

/// Trapezoid along head->tail whose full width goes linearly from `w_head` to
/// `w_tail`. Throws std::invalid_argument("degenerate wedge") if head == tail.
void fill_wedge(GrayRaster& r, Point head, double w_head, Point tail, double w_tail);

/// Closed outline: every consecutive pair of points (including last->first)
/// is drawn as a constant-width wedge.
void stroke_polygon(GrayRaster& r, std::span<const Point> points, double thickness);

/// Solid polygon, even-odd rule.
void fill_polygon(GrayRaster& r, std::span<const Point> points);

/// Network input of shape {1, side, side} in [0, 1]. The raster is centered on
/// a zero-padded square canvas, then area-averaged onto the side x side grid.
Tensor to_input(const GrayRaster& r, int side, bool invert);

}  // namespace diagnet
