#include "diagnet/raster.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <tuple>

namespace diagnet {

GrayRaster::GrayRaster(int width, int height) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("raster size must be positive, got " + std::to_string(width) +
                                "x" + std::to_string(height));
  }
  pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

std::size_t GrayRaster::ink_count() const {
  return static_cast<std::size_t>(
      std::count_if(pixels_.begin(), pixels_.end(), [](std::uint8_t v) { return v != 0; }));
}

namespace {

struct PixelRange {
  int x0, x1, y0, y1;  // inclusive
  bool empty() const { return x0 > x1 || y0 > y1; }
};

// Pixels whose centers may fall inside [minx, maxx] x [miny, maxy], clipped.
PixelRange clip_range(const GrayRaster& r, double minx, double maxx, double miny, double maxy) {
  PixelRange p;
  p.x0 = std::max(0, static_cast<int>(std::floor(minx - 1.0)));
  p.x1 = std::min(r.width() - 1, static_cast<int>(std::ceil(maxx + 1.0)));
  p.y0 = std::max(0, static_cast<int>(std::floor(miny - 1.0)));
  p.y1 = std::min(r.height() - 1, static_cast<int>(std::ceil(maxy + 1.0)));
  return p;
}

}  // namespace

void fill_circle(GrayRaster& r, double cx, double cy, double radius) {
  if (radius < 0) throw std::invalid_argument("negative radius");
  const double rad = std::max(radius, 0.75);
  const double r2 = rad * rad;
  const auto range = clip_range(r, cx - rad, cx + rad, cy - rad, cy + rad);
  if (range.empty()) return;
  for (int y = range.y0; y <= range.y1; ++y) {
    const double dy = y + 0.5 - cy;
    for (int x = range.x0; x <= range.x1; ++x) {
      const double dx = x + 0.5 - cx;
      if (dx * dx + dy * dy <= r2) r.set(x, y, kInk);
    }
  }
}

void fill_wedge(GrayRaster& r, Point head, double w_head, Point tail, double w_tail) {
  if (w_head < 0 || w_tail < 0) throw std::invalid_argument("negative wedge width");
  if (head == tail) throw std::invalid_argument("degenerate wedge");
  // Fixed endpoint order so that (head, tail) and (tail, head) with swapped
  // widths evaluate identical arithmetic.
  if (std::tie(tail.x, tail.y) < std::tie(head.x, head.y)) {
    std::swap(head, tail);
    std::swap(w_head, w_tail);
  }
  const double dx = tail.x - head.x;
  const double dy = tail.y - head.y;
  const double len2 = dx * dx + dy * dy;
  const double len = std::sqrt(len2);
  const double reach = std::max(w_head, w_tail) / 2.0;
  const auto range = clip_range(r, std::min(head.x, tail.x) - reach, std::max(head.x, tail.x) + reach,
                                std::min(head.y, tail.y) - reach, std::max(head.y, tail.y) + reach);
  if (range.empty()) return;
  for (int y = range.y0; y <= range.y1; ++y) {
    const double py = y + 0.5 - head.y;
    for (int x = range.x0; x <= range.x1; ++x) {
      const double px = x + 0.5 - head.x;
      const double t = (px * dx + py * dy) / len2;
      if (t < 0.0 || t > 1.0) continue;
      const double dist = std::abs(dx * py - dy * px) / len;
      const double half = (w_head + t * (w_tail - w_head)) / 2.0;
      if (dist <= half) r.set(x, y, kInk);
    }
  }
}

void stroke_polygon(GrayRaster& r, std::span<const Point> points, double thickness) {
  if (points.size() < 2) throw std::invalid_argument("stroke_polygon needs at least 2 points");
  if (thickness < 1) throw std::invalid_argument("stroke thickness must be >= 1");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point& a = points[i];
    const Point& b = points[(i + 1) % points.size()];
    fill_wedge(r, a, thickness, b, thickness);
  }
}

void fill_polygon(GrayRaster& r, std::span<const Point> points) {
  if (points.size() < 3) throw std::invalid_argument("fill_polygon needs at least 3 points");
  double miny = points[0].y, maxy = points[0].y, minx = points[0].x, maxx = points[0].x;
  for (const auto& p : points) {
    miny = std::min(miny, p.y);
    maxy = std::max(maxy, p.y);
    minx = std::min(minx, p.x);
    maxx = std::max(maxx, p.x);
  }
  const auto range = clip_range(r, minx, maxx, miny, maxy);
  if (range.empty()) return;
  std::vector<double> xs;
  for (int y = range.y0; y <= range.y1; ++y) {
    const double yc = y + 0.5;
    xs.clear();
    for (std::size_t i = 0; i < points.size(); ++i) {
      const Point& a = points[i];
      const Point& b = points[(i + 1) % points.size()];
      if ((a.y > yc) != (b.y > yc)) xs.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const int x0 = std::max(range.x0, static_cast<int>(std::ceil(xs[k] - 0.5)));
      const int x1 = std::min(range.x1, static_cast<int>(std::floor(xs[k + 1] - 0.5)));
      for (int x = x0; x <= x1; ++x) r.set(x, y, kInk);
    }
  }
}

namespace {

// Weights of source cells [0, n) for each of `side` output bins of width n/side.
std::vector<std::vector<std::pair<int, double>>> area_weights(int n, int side) {
  std::vector<std::vector<std::pair<int, double>>> w(side);
  const double step = static_cast<double>(n) / side;
  for (int i = 0; i < side; ++i) {
    const double a = i * step;
    const double b = (i + 1) * step;
    for (int k = static_cast<int>(std::floor(a)); k < n && k < b; ++k) {
      const double overlap = std::min(b, k + 1.0) - std::max(a, static_cast<double>(k));
      if (overlap > 0) w[i].emplace_back(k, overlap / step);
    }
  }
  return w;
}

}  // namespace

Tensor to_input(const GrayRaster& r, int side, bool invert) {
  if (side < 1) throw std::invalid_argument("input side must be positive");
  const int s = std::max(r.width(), r.height());
  const int ox = (s - r.width()) / 2;
  const int oy = (s - r.height()) / 2;
  const auto weights = area_weights(s, side);

  // Horizontal pass over raster rows (padding contributes zero).
  std::vector<double> rows(static_cast<std::size_t>(r.height()) * side, 0.0);
  for (int y = 0; y < r.height(); ++y) {
    for (int j = 0; j < side; ++j) {
      double acc = 0;
      for (auto [k, w] : weights[j]) {
        const int x = k - ox;
        if (x >= 0 && x < r.width()) acc += w * r.at(x, y);
      }
      rows[static_cast<std::size_t>(y) * side + j] = acc;
    }
  }

  Tensor out({1, static_cast<std::size_t>(side), static_cast<std::size_t>(side)});
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) {
      double acc = 0;
      for (auto [k, w] : weights[i]) {
        const int y = k - oy;
        if (y >= 0 && y < r.height()) acc += w * rows[static_cast<std::size_t>(y) * side + j];
      }
      const double v = acc / 255.0;
      out[static_cast<std::size_t>(i) * side + j] = v;
    }
  }
  if (invert) {
    for (auto& v : out.data()) v = 1.0 - v;
  }
  return out;
}

}  // namespace diagnet
