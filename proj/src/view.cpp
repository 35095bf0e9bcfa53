#include "tilestream/view.hpp"

#include <algorithm>
#include <cmath>

#include "tilestream/errors.hpp"

namespace tilestream::view {

void ResizeSpec::validate() const {
  if (target_px <= 0 || patch_px <= 0) {
    throw Error(ErrorCode::InvalidArgument, "target and patch sizes must be positive");
  }
  if (target_px % patch_px != 0) {
    throw Error(ErrorCode::NotDivisible, "target_px must be a multiple of the patch size");
  }
}

double effective_mpp_after_resize(int source_px, double source_mpp, int target_px) {
  if (source_px <= 0 || target_px <= 0 || !(source_mpp > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "resize inputs must be positive");
  }
  return source_mpp * source_px / target_px;
}

TileImage center_crop(const TileImage& tile, int crop_px) {
  if (crop_px <= 0) throw Error(ErrorCode::InvalidArgument, "crop size must be positive");
  if (crop_px > tile.width || crop_px > tile.height) {
    throw Error(ErrorCode::CropTooLarge, std::to_string(crop_px) + " exceeds " +
                                             std::to_string(tile.width) + "x" +
                                             std::to_string(tile.height));
  }
  const int ox = (tile.width - crop_px) / 2;
  const int oy = (tile.height - crop_px) / 2;
  return TileImage(crop(tile, ox, oy, crop_px, crop_px), tile.mpp, tile.origin_l0, tile.slide_id);
}

TileImage prepare_eval_tile(const TileImage& tile, const ResizeSpec& spec) {
  spec.validate();
  TileImage square = tile;
  if (spec.strategy == ResizeStrategy::CenterCropThenResize && tile.width != tile.height) {
    square = center_crop(tile, std::min(tile.width, tile.height));
  }
  const bool area = spec.interpolation == Interpolation::Area && square.width == square.height &&
                    square.width >= spec.target_px;
  RgbImage pixels =
      area ? area_resample(square, 0.0, 0.0, static_cast<double>(square.width) / spec.target_px,
                           spec.target_px, spec.target_px)
           : resize_bilinear(square, spec.target_px, spec.target_px);
  TileImage out(std::move(pixels), 0.0, square.origin_l0, square.slide_id);
  // Non-square stretching has no single spacing; report the horizontal one.
  out.mpp = square.mpp > 0.0 ? effective_mpp_after_resize(square.width, square.mpp, spec.target_px)
                             : 0.0;
  return out;
}

}  // namespace tilestream::view
