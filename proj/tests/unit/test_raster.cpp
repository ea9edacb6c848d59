#include <cmath>
#include <functional>
#include <numbers>
#include <png.h>

#include "doctest.h"
#include "diagnet/png.hpp"
#include "diagnet/raster.hpp"
#include "diagnet/rng.hpp"

using namespace diagnet;

namespace {

// Reference quadrilateral test: the wedge outline as four corners and a
// same-side check against each edge.
bool in_convex(const std::vector<Point>& poly, double x, double y) {
  int sign = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % poly.size()];
    const double c = (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x);
    if (std::abs(c) < 1e-12) continue;
    const int s = c > 0 ? 1 : -1;
    if (sign == 0) sign = s;
    if (s != sign) return false;
  }
  return true;
}

std::vector<Point> wedge_corners(Point h, double wh, Point t, double wt) {
  const double len = std::hypot(t.x - h.x, t.y - h.y);
  const double nx = -(t.y - h.y) / len, ny = (t.x - h.x) / len;
  return {{h.x + nx * wh / 2, h.y + ny * wh / 2},
          {t.x + nx * wt / 2, t.y + ny * wt / 2},
          {t.x - nx * wt / 2, t.y - ny * wt / 2},
          {h.x - nx * wh / 2, h.y - ny * wh / 2}};
}

int mismatches(const GrayRaster& r, const std::function<bool(double, double)>& inside) {
  int bad = 0;
  for (int y = 0; y < r.height(); ++y) {
    for (int x = 0; x < r.width(); ++x) {
      if ((r.at(x, y) == kInk) != inside(x + 0.5, y + 0.5)) ++bad;
    }
  }
  return bad;
}

GrayRaster random_raster(Rng& rng, int w, int h) {
  GrayRaster r(w, h);
  for (auto& p : r.pixels()) p = static_cast<std::uint8_t>(rng.below(256));
  return r;
}

// RGB PNG written directly with libpng, independent of the encoder under test.
std::vector<std::uint8_t> rgb_png(int w, int h, const std::vector<std::uint8_t>& rgb) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = w;
  img.height = h;
  img.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  REQUIRE(png_image_write_to_memory(&img, nullptr, &size, 0, rgb.data(), 0, nullptr));
  std::vector<std::uint8_t> out(size);
  REQUIRE(png_image_write_to_memory(&img, out.data(), &size, 0, rgb.data(), 0, nullptr));
  out.resize(size);
  return out;
}

}  // namespace

TEST_SUITE("raster") {

TEST_CASE("new rasters are blank") {
  GrayRaster r(4, 3);
  CHECK(r.pixels().size() == 12);
  CHECK(r.ink_count() == 0);
  GrayRaster one(1, 1);
  CHECK(one.at(0, 0) == 0);
  CHECK_THROWS_AS(GrayRaster(0, 3), std::invalid_argument);
  CHECK_THROWS_AS(GrayRaster(3, 0), std::invalid_argument);
}

TEST_CASE("zero radius circle at a pixel center sets one pixel") {
  GrayRaster r(9, 9);
  fill_circle(r, 4.5, 4.5, 0.0);
  CHECK(r.ink_count() == 1);
  CHECK(r.at(4, 4) == kInk);
}

TEST_CASE("circle matches brute-force count") {
  GrayRaster r(40, 40);
  fill_circle(r, 20.3, 19.7, 10.0);
  const double area = std::numbers::pi * 100;
  const double slack = 2 * std::numbers::pi * 10;
  CHECK(r.ink_count() >= area - slack);
  CHECK(r.ink_count() <= area + slack);
  CHECK(mismatches(r, [](double x, double y) { return std::hypot(x - 20.3, y - 19.7) <= 10.0; }) == 0);
}

TEST_CASE("off-canvas circle clips to nothing") {
  GrayRaster r(20, 20);
  fill_circle(r, -10, 5, 4);
  fill_circle(r, 30, 30, 5);
  CHECK(r.ink_count() == 0);
  fill_circle(r, -1, 10, 4);
  CHECK(r.ink_count() > 0);
}

TEST_CASE("constant wedge covers about length times width") {
  GrayRaster r(60, 30);
  const double len = 40, w = 6;
  fill_wedge(r, {10, 15}, w, {10 + len, 15}, w);
  CHECK(std::abs(static_cast<double>(r.ink_count()) - len * w) <= 2 * (len + w));
}

TEST_CASE("wedge agrees with a corner-based quadrilateral") {
  Rng rng(5);
  for (int k = 0; k < 50; ++k) {
    const Point h{rng.uniform(2, 60), rng.uniform(2, 60)};
    const Point t{rng.uniform(2, 60), rng.uniform(2, 60)};
    const double wh = rng.bernoulli(0.3) ? 0.0 : rng.uniform(0.5, 9);
    const double wt = rng.uniform(0.5, 9);
    GrayRaster r(64, 64);
    fill_wedge(r, h, wh, t, wt);
    const auto quad = wedge_corners(h, wh, t, wt);
    // Pixel centers landing on an edge within rounding may go either way.
    CHECK(mismatches(r, [&](double x, double y) { return in_convex(quad, x, y); }) <= 2);
  }
}

TEST_CASE("pointed wedge has no ink at the head") {
  GrayRaster r(40, 20);
  fill_wedge(r, {5, 10}, 0.0, {35, 10}, 8.0);
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 4; ++x) CHECK(r.at(x, y) == 0);
  }
  int near_head = 0;
  for (int y = 0; y < 20; ++y) near_head += r.at(5, y) == kInk;
  CHECK(near_head <= 1);
}

TEST_CASE("wedge endpoints are symmetric") {
  Rng rng(9);
  for (int k = 0; k < 30; ++k) {
    const Point a{rng.uniform(0, 50), rng.uniform(0, 50)};
    const Point b{rng.uniform(0, 50), rng.uniform(0, 50)};
    const double wa = rng.uniform(0, 7), wb = rng.uniform(0, 7);
    GrayRaster r1(50, 50), r2(50, 50);
    fill_wedge(r1, a, wa, b, wb);
    fill_wedge(r2, b, wb, a, wa);
    CHECK(r1 == r2);
  }
}

TEST_CASE("degenerate wedge is rejected") {
  GrayRaster r(10, 10);
  try {
    fill_wedge(r, {3, 3}, 1, {3, 3}, 1);
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()) == "degenerate wedge");
  }
}

TEST_CASE("unit rectangle outline pixel count") {
  GrayRaster r(30, 30);
  const std::vector<Point> rect{{5.2, 5.2}, {15.2, 5.2}, {15.2, 11.2}, {5.2, 11.2}};
  stroke_polygon(r, rect, 1.0);
  CHECK(r.ink_count() >= 28);
  CHECK(r.ink_count() <= 44);
}

TEST_CASE("stroke errors and clipping") {
  GrayRaster r(20, 20);
  const std::vector<Point> one{{1, 1}};
  CHECK_THROWS(stroke_polygon(r, one, 1));
  const std::vector<Point> same{{4, 4}, {4, 4}};
  CHECK_THROWS(stroke_polygon(r, same, 1));
  const std::vector<Point> far{{100, 100}, {120, 100}, {120, 130}};
  stroke_polygon(r, far, 2);
  CHECK(r.ink_count() == 0);
}

TEST_CASE("filled polygon matches even-odd reference") {
  GrayRaster r(40, 40);
  const std::vector<Point> diamond{{20.1, 3.3}, {35.2, 20.4}, {20.1, 36.7}, {4.6, 20.4}};
  fill_polygon(r, diamond);
  CHECK(mismatches(r, [&](double x, double y) { return in_convex(diamond, x, y); }) <= 2);
}

TEST_CASE("drawing is monotone and order independent") {
  Rng rng(3);
  GrayRaster a(48, 48), b(48, 48);
  std::vector<std::function<void(GrayRaster&)>> ops;
  for (int k = 0; k < 12; ++k) {
    const double x = rng.uniform(0, 48), y = rng.uniform(0, 48), s = rng.uniform(0, 6);
    const double x2 = rng.uniform(0, 48), y2 = rng.uniform(0, 48);
    if (k % 2) {
      ops.push_back([=](GrayRaster& r) { fill_circle(r, x, y, s); });
    } else {
      ops.push_back([=](GrayRaster& r) { fill_wedge(r, {x, y}, s, {x2, y2}, 1.5); });
    }
  }
  std::size_t prev = 0;
  for (auto& op : ops) {
    const GrayRaster before = a;
    op(a);
    for (std::size_t i = 0; i < before.pixels().size(); ++i) {
      if (before.pixels()[i] == kInk) CHECK(a.pixels()[i] == kInk);
    }
    CHECK(a.ink_count() >= prev);
    prev = a.ink_count();
  }
  for (auto it = ops.rbegin(); it != ops.rend(); ++it) (*it)(b);
  CHECK(a == b);
}

TEST_CASE("to_input resampling") {
  SUBCASE("full ink is all ones") {
    GrayRaster r(10, 10);
    for (auto& p : r.pixels()) p = 255;
    const Tensor t = to_input(r, 5, false);
    CHECK(t.shape() == Shape{1, 5, 5});
    for (double v : t.data()) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("checkerboard averages to one half") {
    GrayRaster r(2, 2);
    r.set(1, 0, 255);
    r.set(0, 1, 255);
    CHECK(to_input(r, 1, false)[0] == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("inversion identity") {
    Rng rng(1);
    const GrayRaster r = random_raster(rng, 37, 23);
    const Tensor a = to_input(r, 16, false);
    const Tensor b = to_input(r, 16, true);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == 1.0 - a[i]);
  }
  SUBCASE("wide rasters are centered on a padded square") {
    GrayRaster r(8, 4);
    for (auto& p : r.pixels()) p = 255;
    const Tensor t = to_input(r, 8, false);
    for (int x = 0; x < 8; ++x) {
      CHECK(t[0 * 8 + x] == 0.0);
      CHECK(t[2 * 8 + x] == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(t[7 * 8 + x] == 0.0);
    }
  }
  SUBCASE("mean intensity is preserved when downsampling a square") {
    Rng rng(2);
    const GrayRaster r = random_raster(rng, 30, 30);
    double sum = 0;
    for (auto p : r.pixels()) sum += p;
    const Tensor t = to_input(r, 7, false);
    double tsum = 0;
    for (double v : t.data()) tsum += v;
    CHECK(tsum / t.size() == doctest::Approx(sum / 900.0 / 255.0).epsilon(1e-9));
  }
}

TEST_CASE("png round trip") {
  Rng rng(4);
  for (auto [w, h] : {std::pair{1, 1}, {7, 3}, {64, 64}, {129, 31}}) {
    const GrayRaster r = random_raster(rng, w, h);
    const auto bytes = encode_png(r);
    REQUIRE(bytes.size() > 8);
    CHECK(bytes[1] == 'P');
    CHECK(decode_image(bytes) == r);
  }
}

TEST_CASE("rgb decode uses integer luma") {
  const std::vector<std::uint8_t> rgb{255, 255, 255, 255, 0, 0, 0, 255, 0, 0, 0, 255};
  const GrayRaster g = decode_image(rgb_png(4, 1, rgb));
  CHECK(g.width() == 4);
  CHECK(g.at(0, 0) == 255);
  CHECK(g.at(1, 0) == 76);   // round(0.299 * 255)
  CHECK(g.at(2, 0) == 150);  // round(0.587 * 255)
  CHECK(g.at(3, 0) == 29);   // round(0.114 * 255)
}

TEST_CASE("malformed images are rejected") {
  const std::vector<std::uint8_t> junk{1, 2, 3, 4, 5};
  CHECK_THROWS_AS(decode_image(junk), ImageError);
  GrayRaster r(5, 5);
  auto bytes = encode_png(r);
  bytes.resize(bytes.size() / 2);
  CHECK_THROWS_AS(decode_image(bytes), ImageError);
}

}  // TEST_SUITE
