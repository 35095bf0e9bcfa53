#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "tilestream/image.hpp"
#include "tilestream/mask.hpp"

namespace tilestream {

enum class TissueStyle {
  HematoxylinEosin,  // purple/pink tissue with darker nuclei
  GrayMarker,        // neutral gray: foreground by value, rejected by the HSV filter
};

struct SyntheticSlideSpec {
  std::uint64_t seed = 0;
  int width_px = 4096;
  int height_px = 4096;
  double level0_mpp = 0.25;
  double tissue_coverage = 0.5;
  TissueStyle style = TissueStyle::HematoxylinEosin;
  int pyramid_levels = 1;  // 0 = halve until the short side would drop below 512
};

struct SlidePackage {
  RgbImage level0;
  std::optional<double> level0_mpp;  // omitted from the sidecar when empty
  std::optional<BitMask> tissue_mask;
  std::optional<std::uint64_t> seed;
  int pyramid_levels = 1;
};

// Writes <stem>.png (+ <stem>_l<k>.png per extra level), <stem>.mask when a
// tissue mask is given, and the JSON sidecar at `sidecar`. Extra levels are
// box-filtered directly from level 0 by powers of two.
void write_slide_package(const std::filesystem::path& sidecar, const SlidePackage& package);

// Deterministic procedural slide: near-white background with elliptical
// pseudo-tissue. Returns the sidecar path (== out). Identical spec, identical
// bytes.
//
// Errors: InvalidArgument (coverage outside (0,1), dimensions < 512), IoError.
std::filesystem::path generate_synthetic_slide(const SyntheticSlideSpec& spec,
                                               const std::filesystem::path& out);

/// The exact tissue mask recorded in a sidecar (level-0 resolution).
BitMask read_tissue_mask(const std::filesystem::path& sidecar);

}  // namespace tilestream
