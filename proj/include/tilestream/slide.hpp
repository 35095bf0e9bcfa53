#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tilestream/image.hpp"

namespace tilestream {

struct PyramidLevel {
  int width = 0;
  int height = 0;
  double downsample = 1.0;
};

// An opened pyramidal slide. Immutable after open_slide(); copies share the
// same decoded-level cache, which is filled lazily and is safe to hit from
// several threads at once.
class SlideHandle {
 public:
  const std::filesystem::path& path() const;
  const std::string& dataset_id() const;
  const std::string& slide_id() const;
  double level0_mpp() const;
  const std::vector<PyramidLevel>& levels() const;
  int width() const { return levels().front().width; }
  int height() const { return levels().front().height; }

  /// Decoded pixels of one level. Throws DecodeError on corrupt data.
  const RgbImage& level_pixels(std::size_t level) const;

  /// Largest-downsample level whose pixel spacing is still <= mpp.
  std::size_t level_for_mpp(double mpp) const;

  struct Impl;

 private:
  friend SlideHandle open_slide(const std::filesystem::path&, const std::string&,
                                std::optional<double>);
  std::shared_ptr<const Impl> impl_;
};

// Accepts a slide sidecar (.json) or a bare PNG. A bare PNG carries no pixel
// spacing, so it opens only with an override. An override, when given, wins
// over the sidecar value.
//
// Errors: FileNotFound, UnsupportedFormat, MissingMpp.
SlideHandle open_slide(const std::filesystem::path& path, const std::string& dataset_id,
                       std::optional<double> mpp_override = std::nullopt);

// Reads the region whose top-left corner is origin_l0 (level-0 pixels) and
// whose physical size is width_px*mpp by height_px*mpp µm, resampled to
// exactly width_px x height_px.
//
// Errors: InvalidArgument (mpp finer than level 0, non-positive size),
// OutOfBounds, DecodeError.
TileImage read_region(const SlideHandle& slide, Point origin_l0, double mpp, int width_px,
                      int height_px);

/// Footprint of a tile in level-0 pixels along one axis.
double footprint_l0(const SlideHandle& slide, int size_px, double mpp);

}  // namespace tilestream
