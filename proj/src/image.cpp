#include "tilestream/image.hpp"

#include <algorithm>
#include <cmath>

#include "tilestream/errors.hpp"

namespace tilestream {

RgbImage::RgbImage(int w, int h) : width(w), height(h) {
  if (w < 0 || h < 0) throw Error(ErrorCode::InvalidArgument, "negative image dimensions");
  pixels.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, 0);
}

RgbImage::RgbImage(int w, int h, std::vector<std::uint8_t> data)
    : width(w), height(h), pixels(std::move(data)) {
  if (w < 0 || h < 0 || pixels.size() != static_cast<std::size_t>(w) * h * 3) {
    throw Error(ErrorCode::InvalidArgument, "pixel buffer does not match width*height*3");
  }
}

void RgbImage::fill(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  for (std::size_t i = 0; i < pixels.size(); i += 3) {
    pixels[i] = r;
    pixels[i + 1] = g;
    pixels[i + 2] = b;
  }
}

RgbImage crop(const RgbImage& src, int x, int y, int w, int h) {
  if (x < 0 || y < 0 || w < 0 || h < 0 || x + w > src.width || y + h > src.height) {
    throw Error(ErrorCode::OutOfBounds, "crop window outside image");
  }
  RgbImage out(w, h);
  for (int r = 0; r < h; ++r) {
    std::copy_n(src.row(y + r) + static_cast<std::size_t>(x) * 3, static_cast<std::size_t>(w) * 3,
                out.row(r));
  }
  return out;
}

namespace {

struct Tap {
  int index;
  float weight;
};

// For each output cell, the source samples it overlaps and their coverage.
std::vector<std::vector<Tap>> area_taps(double start, double scale, int count, int limit) {
  std::vector<std::vector<Tap>> taps(count);
  for (int i = 0; i < count; ++i) {
    const double lo = start + i * scale;
    const double hi = lo + scale;
    const int first = std::max(0, static_cast<int>(std::floor(lo)));
    const int last = std::min(limit - 1, static_cast<int>(std::ceil(hi)) - 1);
    double total = 0.0;
    for (int s = first; s <= last; ++s) {
      const double w = std::min<double>(hi, s + 1) - std::max<double>(lo, s);
      if (w > 1e-12) {
        taps[i].push_back({s, static_cast<float>(w)});
        total += w;
      }
    }
    for (auto& t : taps[i]) t.weight = static_cast<float>(t.weight / total);
  }
  return taps;
}

std::uint8_t to_u8(float v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

bool is_integer(double v) { return std::abs(v - std::round(v)) < 1e-9; }

RgbImage box_downsample(const RgbImage& src, int x0, int y0, int k, int out_w, int out_h) {
  RgbImage out(out_w, out_h);
  const std::size_t span = static_cast<std::size_t>(out_w) * k * 3;
  std::vector<std::uint32_t> column_sums(span);
  const std::uint32_t n = static_cast<std::uint32_t>(k) * k;
  for (int j = 0; j < out_h; ++j) {
    const std::uint8_t* first = src.row(y0 + j * k) + static_cast<std::size_t>(x0) * 3;
    for (std::size_t c = 0; c < span; ++c) column_sums[c] = first[c];
    for (int dy = 1; dy < k; ++dy) {
      const std::uint8_t* in = src.row(y0 + j * k + dy) + static_cast<std::size_t>(x0) * 3;
      for (std::size_t c = 0; c < span; ++c) column_sums[c] += in[c];
    }
    std::uint8_t* o = out.row(j);
    const std::uint32_t* cs = column_sums.data();
    for (int i = 0; i < out_w; ++i) {
      std::uint32_t a0 = 0, a1 = 0, a2 = 0;
      for (int dx = 0; dx < k; ++dx, cs += 3) {
        a0 += cs[0];
        a1 += cs[1];
        a2 += cs[2];
      }
      o[i * 3] = static_cast<std::uint8_t>((a0 + n / 2) / n);
      o[i * 3 + 1] = static_cast<std::uint8_t>((a1 + n / 2) / n);
      o[i * 3 + 2] = static_cast<std::uint8_t>((a2 + n / 2) / n);
    }
  }
  return out;
}

}  // namespace

RgbImage area_resample(const RgbImage& src, double x0, double y0, double scale, int out_w,
                       int out_h) {
  if (scale < 1.0 - 1e-12) {
    throw Error(ErrorCode::InvalidArgument, "area_resample requires scale >= 1");
  }
  const double tol = 1e-6;
  if (x0 < -tol || y0 < -tol || x0 + out_w * scale > src.width + tol ||
      y0 + out_h * scale > src.height + tol) {
    throw Error(ErrorCode::OutOfBounds, "resample window outside source image");
  }
  if (is_integer(scale) && is_integer(x0) && is_integer(y0)) {
    const int k = static_cast<int>(std::lround(scale));
    const int ix = static_cast<int>(std::lround(x0));
    const int iy = static_cast<int>(std::lround(y0));
    if (k == 1) return crop(src, ix, iy, out_w, out_h);
    return box_downsample(src, ix, iy, k, out_w, out_h);
  }

  const auto xt = area_taps(x0, scale, out_w, src.width);
  const auto yt = area_taps(y0, scale, out_h, src.height);
  const int row_lo = yt.empty() || yt.front().empty() ? 0 : yt.front().front().index;
  const int row_hi = yt.empty() || yt.back().empty() ? -1 : yt.back().back().index;

  // Horizontal pass over the rows the vertical taps touch.
  const int rows = row_hi - row_lo + 1;
  std::vector<float> horiz(static_cast<std::size_t>(std::max(rows, 0)) * out_w * 3);
  for (int r = 0; r < rows; ++r) {
    const std::uint8_t* in = src.row(row_lo + r);
    float* h = &horiz[static_cast<std::size_t>(r) * out_w * 3];
    for (int i = 0; i < out_w; ++i) {
      float s0 = 0, s1 = 0, s2 = 0;
      for (const Tap& t : xt[i]) {
        const std::uint8_t* p = in + static_cast<std::size_t>(t.index) * 3;
        s0 += t.weight * p[0];
        s1 += t.weight * p[1];
        s2 += t.weight * p[2];
      }
      h[i * 3] = s0;
      h[i * 3 + 1] = s1;
      h[i * 3 + 2] = s2;
    }
  }

  RgbImage out(out_w, out_h);
  std::vector<float> acc(static_cast<std::size_t>(out_w) * 3);
  for (int j = 0; j < out_h; ++j) {
    std::fill(acc.begin(), acc.end(), 0.0f);
    for (const Tap& t : yt[j]) {
      const float* h = &horiz[static_cast<std::size_t>(t.index - row_lo) * out_w * 3];
      for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += t.weight * h[c];
    }
    std::uint8_t* o = out.row(j);
    for (std::size_t c = 0; c < acc.size(); ++c) o[c] = to_u8(acc[c]);
  }
  return out;
}

RgbImage resize_bilinear(const RgbImage& src, int out_w, int out_h) {
  if (src.empty() || out_w <= 0 || out_h <= 0) {
    throw Error(ErrorCode::InvalidArgument, "resize_bilinear needs non-empty input and output");
  }
  if (out_w == src.width && out_h == src.height) return src;
  const double sx = static_cast<double>(src.width) / out_w;
  const double sy = static_cast<double>(src.height) / out_h;

  struct Lerp {
    int i0, i1;
    float f;
  };
  auto lerps = [](double scale, int count, int limit) {
    std::vector<Lerp> v(count);
    for (int i = 0; i < count; ++i) {
      const double pos = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(limit - 1));
      const int i0 = static_cast<int>(std::floor(pos));
      const int i1 = std::min(i0 + 1, limit - 1);
      v[i] = {i0, i1, static_cast<float>(pos - i0)};
    }
    return v;
  };
  const auto xl = lerps(sx, out_w, src.width);
  const auto yl = lerps(sy, out_h, src.height);

  RgbImage out(out_w, out_h);
  for (int j = 0; j < out_h; ++j) {
    const std::uint8_t* r0 = src.row(yl[j].i0);
    const std::uint8_t* r1 = src.row(yl[j].i1);
    const float fy = yl[j].f;
    std::uint8_t* o = out.row(j);
    for (int i = 0; i < out_w; ++i) {
      const Lerp& lx = xl[i];
      for (int c = 0; c < 3; ++c) {
        const float top = r0[lx.i0 * 3 + c] + lx.f * (r0[lx.i1 * 3 + c] - r0[lx.i0 * 3 + c]);
        const float bot = r1[lx.i0 * 3 + c] + lx.f * (r1[lx.i1 * 3 + c] - r1[lx.i0 * 3 + c]);
        o[i * 3 + c] = to_u8(top + fy * (bot - top));
      }
    }
  }
  return out;
}

}  // namespace tilestream
