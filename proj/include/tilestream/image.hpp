#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tilestream {

struct Point {
  std::int64_t x = 0;
  std::int64_t y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Row-major interleaved RGB, 8 bits per channel.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(int w, int h);
  RgbImage(int w, int h, std::vector<std::uint8_t> data);

  bool empty() const noexcept { return width == 0 || height == 0; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  std::uint8_t* row(int y) { return pixels.data() + static_cast<std::size_t>(y) * width * 3; }
  const std::uint8_t* row(int y) const {
    return pixels.data() + static_cast<std::size_t>(y) * width * 3;
  }
  std::uint8_t& at(int x, int y, int c) { return row(y)[x * 3 + c]; }
  std::uint8_t at(int x, int y, int c) const { return row(y)[x * 3 + c]; }

  void fill(std::uint8_t r, std::uint8_t g, std::uint8_t b);

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// A pixel buffer cut out of a slide, with its physical provenance.
struct TileImage : RgbImage {
  double mpp = 0.0;  // µm per pixel of this buffer
  Point origin_l0;   // level-0 pixel coordinates of the top-left corner
  std::string slide_id;

  TileImage() = default;
  TileImage(RgbImage image, double mpp_, Point origin, std::string slide)
      : RgbImage(std::move(image)), mpp(mpp_), origin_l0(origin), slide_id(std::move(slide)) {}
};

RgbImage crop(const RgbImage& src, int x, int y, int w, int h);

// Area-averaging resampler. Output pixel (i, j) is the mean of the source
// over the square [x0 + i*scale, x0 + (i+1)*scale) x [y0 + j*scale, ...),
// with fractional coverage weights at the edges. Requires scale >= 1 and the
// covered window to lie inside src. Integer scale with integer offsets takes
// an exact integer path (round half up).
RgbImage area_resample(const RgbImage& src, double x0, double y0, double scale, int out_w,
                       int out_h);

// Bilinear resize with half-pixel centers (source sample at (i+0.5)*sx-0.5).
RgbImage resize_bilinear(const RgbImage& src, int out_w, int out_h);

}  // namespace tilestream
