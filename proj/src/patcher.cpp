#include "tilestream/patcher.hpp"

#include <algorithm>
#include <cmath>

#include "tilestream/errors.hpp"
#include "tilestream/stain.hpp"

namespace tilestream::patch {

ForegroundMask::ForegroundMask(BitMask bits, double mask_mpp, double level0_mpp,
                               std::string slide_id)
    : bits_(std::move(bits)),
      mask_mpp_(mask_mpp),
      level0_mpp_(level0_mpp),
      slide_id_(std::move(slide_id)) {
  const int w = bits_.width;
  const int h = bits_.height;
  sat_.assign(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
  for (int y = 0; y < h; ++y) {
    double row = 0.0;
    for (int x = 0; x < w; ++x) {
      row += bits_.get(x, y) ? 1.0 : 0.0;
      sat_[static_cast<std::size_t>(y + 1) * (w + 1) + x + 1] =
          sat_[static_cast<std::size_t>(y) * (w + 1) + x + 1] + row;
    }
  }
}

// The integral of a piecewise-constant grid is bilinear inside each cell, so
// interpolating the summed-area table at fractional corners is exact.
double ForegroundMask::cumulative(double x, double y) const {
  const int w = bits_.width;
  x = std::clamp(x, 0.0, static_cast<double>(w));
  y = std::clamp(y, 0.0, static_cast<double>(bits_.height));
  const int x0 = std::min(static_cast<int>(x), w - 1);
  const int y0 = std::min(static_cast<int>(y), bits_.height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  auto S = [&](int i, int j) { return sat_[static_cast<std::size_t>(j) * (w + 1) + i]; };
  const int x1 = std::min(x0 + 1, w);
  const int y1 = std::min(y0 + 1, bits_.height);
  return (1 - fx) * (1 - fy) * S(x0, y0) + fx * (1 - fy) * S(x1, y0) + (1 - fx) * fy * S(x0, y1) +
         fx * fy * S(x1, y1);
}

double ForegroundMask::coverage(double x0, double y0, double x1, double y1) const {
  const double area = (x1 - x0) * (y1 - y0);
  if (!(area > 0.0)) return 0.0;
  const double fg = cumulative(x1, y1) - cumulative(x0, y1) - cumulative(x1, y0) + cumulative(x0, y0);
  return std::clamp(fg / area, 0.0, 1.0);
}

bool is_foreground_pixel(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const stain::Hsv hsv = stain::rgb_to_hsv(r, g, b);
  return hsv.s >= 20 || hsv.v <= 210;
}

ForegroundMask compute_foreground_mask(const SlideHandle& slide, double mask_mpp) {
  if (!(mask_mpp >= slide.level0_mpp())) {
    throw Error(ErrorCode::InvalidArgument, "mask_mpp must be >= level0_mpp");
  }
  const double ratio = slide.level0_mpp() / mask_mpp;
  // floor keeps the thumbnail's physical extent inside the slide
  const int w = std::max(1, static_cast<int>(std::floor(slide.width() * ratio + 1e-9)));
  const int h = std::max(1, static_cast<int>(std::floor(slide.height() * ratio + 1e-9)));
  const TileImage thumb = read_region(slide, {0, 0}, mask_mpp, w, h);

  BitMask bits(w, h);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* row = thumb.row(y);
    for (int x = 0; x < w; ++x) {
      bits.set(x, y, is_foreground_pixel(row[x * 3], row[x * 3 + 1], row[x * 3 + 2]));
    }
  }
  return ForegroundMask(std::move(bits), mask_mpp, slide.level0_mpp(), slide.slide_id());
}

double foreground_fraction(const ForegroundMask& mask, Point origin_l0, int tile_size_px,
                           double tile_mpp) {
  if (tile_size_px <= 0 || !(tile_mpp > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "tile size and mpp must be positive");
  }
  const double to_cells = mask.level0_mpp() / mask.mask_mpp();
  const double extent_cells = physical_extent(tile_size_px, tile_mpp) / mask.mask_mpp();
  const double x0 = origin_l0.x * to_cells;
  const double y0 = origin_l0.y * to_cells;
  const double x1 = x0 + extent_cells;
  const double y1 = y0 + extent_cells;
  // The mask may be up to one cell short of the slide (floor); allow that slack.
  if (x0 < 0 || y0 < 0 || x1 > mask.width() + 1.0 || y1 > mask.height() + 1.0) {
    throw Error(ErrorCode::OutOfBounds, "tile footprint outside foreground mask");
  }
  const double cx1 = std::min(x1, static_cast<double>(mask.width()));
  const double cy1 = std::min(y1, static_cast<double>(mask.height()));
  // Part of the footprint past the mask edge counts as background.
  const double inside = mask.coverage(x0, y0, cx1, cy1) * (cx1 - x0) * (cy1 - y0);
  return std::clamp(inside / (extent_cells * extent_cells), 0.0, 1.0);
}

void SamplerParams::validate() const {
  if (tile_size_px <= 0) throw Error(ErrorCode::InvalidArgument, "tile_size_px must be > 0");
  if (mpp_choices.empty()) throw Error(ErrorCode::InvalidArgument, "mpp_choices is empty");
  for (double m : mpp_choices) {
    if (!(m > 0.0)) throw Error(ErrorCode::InvalidArgument, "mpp choices must be > 0");
  }
  if (!(foreground_threshold > 0.0 && foreground_threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "foreground_threshold must lie in (0, 1]");
  }
  if (max_attempts <= 0) throw Error(ErrorCode::InvalidArgument, "max_attempts must be > 0");
}

TileCandidate sample_tile(const SlideHandle& slide, const ForegroundMask& mask,
                          const SamplerParams& params, Rng& rng, std::vector<Attempt>* trace) {
  params.validate();
  if (mask.slide_id() != slide.slide_id()) {
    throw Error(ErrorCode::InvalidArgument, "mask belongs to a different slide");
  }
  const std::uint64_t draws_before = rng.draws();
  for (int attempt = 1; attempt <= params.max_attempts; ++attempt) {
    const double mpp = params.mpp_choices[rng.uniform_index(params.mpp_choices.size())];
    if (mpp < slide.level0_mpp() * (1.0 - 1e-12)) {
      throw Error(ErrorCode::InvalidArgument,
                  "mpp choice " + std::to_string(mpp) + " is finer than the slide's level 0");
    }
    const double fp = footprint_l0(slide, params.tile_size_px, mpp);
    const auto span_x = static_cast<std::int64_t>(std::floor(slide.width() - fp + 1e-9));
    const auto span_y = static_cast<std::int64_t>(std::floor(slide.height() - fp + 1e-9));
    if (span_x < 0 || span_y < 0) {
      if (trace) trace->push_back({mpp, {-1, -1}, 0.0, false});
      continue;
    }
    Point origin;
    origin.x = static_cast<std::int64_t>(rng.uniform_index(static_cast<std::uint64_t>(span_x) + 1));
    origin.y = static_cast<std::int64_t>(rng.uniform_index(static_cast<std::uint64_t>(span_y) + 1));
    const double fraction = foreground_fraction(mask, origin, params.tile_size_px, mpp);
    const bool accepted = fraction >= params.foreground_threshold;
    if (trace) trace->push_back({mpp, origin, fraction, accepted});
    if (!accepted) continue;

    TileCandidate c;
    c.tile = read_region(slide, origin, mpp, params.tile_size_px, params.tile_size_px);
    c.foreground_fraction = fraction;
    c.attempt_count = attempt;
    c.rng_draws = rng.draws() - draws_before;
    return c;
  }
  throw Error(ErrorCode::MaxAttemptsExceeded,
              "slide " + slide.slide_id() + ": no tile reached foreground threshold in " +
                  std::to_string(params.max_attempts) + " attempts");
}

double physical_extent(int size_px, double mpp) {
  if (size_px <= 0 || !(mpp > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "physical_extent needs positive inputs");
  }
  return size_px * mpp;
}

}  // namespace tilestream::patch
