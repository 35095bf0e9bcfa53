#pragma once

#include "tilestream/image.hpp"

namespace tilestream::view {

enum class ResizeStrategy {
  Resize,                // stretch to target_px x target_px
  CenterCropThenResize,  // square center crop of the short side, then resize
};

enum class Interpolation {
  Bilinear,
  Area,  // box averaging; only for square downscaling, falls back to bilinear otherwise
};

struct ResizeSpec {
  int target_px = 224;
  ResizeStrategy strategy = ResizeStrategy::CenterCropThenResize;
  Interpolation interpolation = Interpolation::Bilinear;
  int patch_px = 14;

  void validate() const;
};

/// source_mpp * source_px / target_px: the physical extent is unchanged.
double effective_mpp_after_resize(int source_px, double source_mpp, int target_px);

/// Centered crop_px square; offsets floor((dim - crop_px) / 2). Errors: CropTooLarge.
/// Provenance (mpp, origin_l0, slide_id) is carried over unchanged.
TileImage center_crop(const TileImage& tile, int crop_px);

// Applies the spec to an evaluation tile and sets mpp to the
// effective spacing after resizing. mpp == 0 means unknown and stays 0.
TileImage prepare_eval_tile(const TileImage& tile, const ResizeSpec& spec);

}  // namespace tilestream::view
