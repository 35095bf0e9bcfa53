#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "tilestream/image.hpp"
#include "tilestream/rng.hpp"

namespace tilestream::stain {

// ---------------------------------------------------------------------------
// HSV

/// 8-bit HSV: hue in half-degrees [0, 180), saturation and value in [0, 255].
struct Hsv {
  int h = 0;
  int s = 0;
  int v = 0;
  friend bool operator==(const Hsv&, const Hsv&) = default;
};

// Hexcone conversion in exact integer arithmetic, each channel rounded half
// up. A hue that rounds to 180 wraps to 0.
Hsv rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b);

struct ChannelRange {
  int lo = 0;
  int hi = 255;
  bool contains(int x) const { return x >= lo && x <= hi; }
};

// Default ranges select stained tissue and reject background, fat and other
// low-information tiles.
struct HsvRanges {
  ChannelRange h{90, 180};
  ChannelRange s{8, 255};
  ChannelRange v{103, 255};
  double min_fraction = 0.60;

  void validate() const;
  bool contains(const Hsv& p) const { return h.contains(p.h) && s.contains(p.s) && v.contains(p.v); }
};

struct HsvVerdict {
  bool accept = false;
  double in_range_fraction = 0.0;
  std::size_t in_range = 0;
  std::size_t total = 0;
};

/// accept == (in_range_fraction >= min_fraction). Throws on an empty tile.
HsvVerdict hsv_tile_filter(const RgbImage& tile, const HsvRanges& ranges = {});

// ---------------------------------------------------------------------------
// HED stain space

/// Optical density offset against log(0), in 8-bit intensity units.
inline constexpr double kOdEpsilon = 1.0;

// Rows are unit optical-density vectors for hematoxylin, eosin and DAB.
// A pixel's optical density is od = hed * rows.
class StainMatrix {
 public:
  /// Rows are normalized; throws InvalidArgument if singular.
  static StainMatrix from_rows(const Eigen::Matrix3d& rows);
  /// Built-in hematoxylin/eosin/DAB vectors (matches data/stain_matrix_hed.txt).
  static StainMatrix ruifrok_johnston();
  /// Plain text, three rows of three numbers; '#' starts a comment.
  static StainMatrix load(const std::filesystem::path& path);

  const Eigen::Matrix3d& rows() const { return rows_; }
  const Eigen::Matrix3d& inverse() const { return inverse_; }
  double condition_number() const;

 private:
  Eigen::Matrix3d rows_;
  Eigen::Matrix3d inverse_;
};

/// Interleaved per-pixel (H, E, D) concentrations.
struct HedImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  std::array<double, 3> at(int x, int y) const {
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    return {data[i], data[i + 1], data[i + 2]};
  }
};

HedImage rgb_to_hed(const RgbImage& tile, const StainMatrix& matrix = StainMatrix::ruifrok_johnston());
RgbImage hed_to_rgb(const HedImage& hed, const StainMatrix& matrix = StainMatrix::ruifrok_johnston());

/// Optical density of one 8-bit intensity.
double optical_density(std::uint8_t intensity);

// Per-channel affine perturbation of stain concentrations:
// hed' = alpha * hed + beta.
struct HedParams {
  std::array<double, 3> alpha{1.0, 1.0, 1.0};
  std::array<double, 3> beta{0.0, 0.0, 0.0};
  double sigma = 0.0;

  /// alpha ~ U[1-sigma, 1+sigma], beta ~ U[-sigma, sigma]; draw order
  /// alpha H,E,D then beta H,E,D.
  static HedParams sample(double sigma, Rng& rng);
};

// Equivalent to hed_to_rgb(alpha * rgb_to_hed(tile) + beta); folded into one
// 3x3 optical-density transform per pixel.
RgbImage hed_augment(const RgbImage& tile, const HedParams& params,
                     const StainMatrix& matrix = StainMatrix::ruifrok_johnston());
TileImage hed_augment(const TileImage& tile, const HedParams& params,
                      const StainMatrix& matrix = StainMatrix::ruifrok_johnston());

}  // namespace tilestream::stain
