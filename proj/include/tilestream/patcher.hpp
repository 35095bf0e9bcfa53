#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tilestream/image.hpp"
#include "tilestream/mask.hpp"
#include "tilestream/rng.hpp"
#include "tilestream/slide.hpp"

namespace tilestream::patch {

/// Pixel spacing of the thumbnail that foreground masks are computed on.
inline constexpr double kDefaultMaskMpp = 8.0;

// Tissue mask sampled on a coarse grid. Coverage queries go through a
// summed-area table, so a footprint's foreground fraction costs O(1).
class ForegroundMask {
 public:
  ForegroundMask(BitMask bits, double mask_mpp, double level0_mpp, std::string slide_id);

  const BitMask& bits() const { return bits_; }
  double mask_mpp() const { return mask_mpp_; }
  int width() const { return bits_.width; }
  int height() const { return bits_.height; }
  const std::string& slide_id() const { return slide_id_; }

  /// Area-weighted foreground coverage of a rectangle given in mask cells.
  double coverage(double x0, double y0, double x1, double y1) const;

  /// Level-0 pixel spacing of the slide this mask was computed from.
  double level0_mpp() const { return level0_mpp_; }

 private:
  double cumulative(double x, double y) const;

  BitMask bits_;
  double mask_mpp_;
  double level0_mpp_;
  std::string slide_id_;
  std::vector<double> sat_;  // (width+1) x (height+1)
};

/// Foreground iff saturation >= 20 or value <= 210 on the 8-bit HSV scale.
bool is_foreground_pixel(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// Errors: InvalidArgument (mask_mpp finer than level 0), read errors.
ForegroundMask compute_foreground_mask(const SlideHandle& slide, double mask_mpp = kDefaultMaskMpp);

// Fraction of the tile's physical footprint (tile_size_px * tile_mpp µm per
// side) that is foreground, weighting each mask cell by its overlap area.
// Errors: OutOfBounds.
double foreground_fraction(const ForegroundMask& mask, Point origin_l0, int tile_size_px,
                           double tile_mpp);

struct SamplerParams {
  int tile_size_px = 256;
  std::vector<double> mpp_choices{2.0, 1.0, 0.5, 0.25};
  double foreground_threshold = 0.40;
  int max_attempts = 1000;

  void validate() const;
};

struct TileCandidate {
  TileImage tile;
  double foreground_fraction = 0.0;
  int attempt_count = 0;
  std::uint64_t rng_draws = 0;
};

struct Attempt {
  double mpp = 0.0;
  Point origin;  // {-1, -1} when the footprint did not fit
  double foreground_fraction = 0.0;
  bool accepted = false;
};

// Draw order per attempt: mpp index, x, y. An mpp whose footprint does not
// fit inside the slide counts as a rejected attempt. Every attempt is appended
// to trace when given.
//
// Errors: MaxAttemptsExceeded, InvalidArgument, read errors.
TileCandidate sample_tile(const SlideHandle& slide, const ForegroundMask& mask,
                          const SamplerParams& params, Rng& rng,
                          std::vector<Attempt>* trace = nullptr);

/// Physical side length in µm of size_px pixels at mpp.
double physical_extent(int size_px, double mpp);

}  // namespace tilestream::patch
