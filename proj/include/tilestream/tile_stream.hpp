#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tilestream/manifest.hpp"
#include "tilestream/patcher.hpp"
#include "tilestream/slide.hpp"
#include "tilestream/stain.hpp"

namespace tilestream {

enum class SlideWeighting {
  UniformBySlide,  // every slide of a dataset equally likely
  UniformByArea,   // proportional to level-0 physical area
};

struct DatasetWeight {
  std::string dataset;
  double weight = 1.0;
};

struct StreamConfig {
  // Empty: every dataset in the manifest, equal weights.
  std::vector<DatasetWeight> datasets;
  patch::SamplerParams sampler;
  std::optional<stain::HsvRanges> hsv = stain::HsvRanges{};
  std::vector<double> hsv_disabled_mpps;
  std::optional<double> hed_sigma = 0.05;
  int batch_size = 12;
  std::uint64_t seed = 0;
  SlideWeighting slide_weighting = SlideWeighting::UniformBySlide;
  double mask_mpp = patch::kDefaultMaskMpp;
  // Share of emitted tiles re-checked against the foreground and HSV rules.
  double verify_fraction = 0.01;
  int workers = 1;

  void validate() const;
  nlohmann::json to_json() const;
};

struct TileMeta {
  std::string dataset;
  std::string slide_id;
  std::int64_t x = 0;
  std::int64_t y = 0;
  double mpp = 0.0;
  int width = 0;
  int height = 0;
  std::uint64_t tile_index = 0;
  std::optional<std::array<double, 3>> hed_alpha;  // empty when HED is disabled
  std::optional<std::array<double, 3>> hed_beta;

  nlohmann::json to_json() const;
  static TileMeta from_json(const nlohmann::json& j);
  friend bool operator==(const TileMeta&, const TileMeta&) = default;
};

struct TileBatch {
  std::vector<TileImage> tiles;
  std::vector<TileMeta> meta;

  std::size_t size() const { return tiles.size(); }
};

// Opened slides and their foreground masks, grouped by dataset. Built once and
// shared read-only by every stream.
class SlideLibrary {
 public:
  struct Slide {
    SlideHandle handle;
    patch::ForegroundMask mask;
    double area_um2 = 0.0;
  };

  static std::shared_ptr<const SlideLibrary> build(const DatasetManifest& manifest,
                                                   double mask_mpp = patch::kDefaultMaskMpp);

  /// Errors: ExhaustedDataset (unknown or empty dataset).
  const std::vector<Slide>& slides(const std::string& dataset) const;
  std::vector<std::string> datasets() const;

 private:
  std::map<std::string, std::vector<Slide>> by_dataset_;
};

// One reproducible tile stream. Tile i depends only on (seed, i): its random
// generator is seeded with derive_seed(seed, i), and per tile the draw order is
// dataset, slide, then sample_tile's (mpp, x, y) per attempt, then HED params.
// A tile rejected by the HSV filter is redrawn from the dataset step on,
// sharing the sampler's max_attempts budget.
class TileStream {
 public:
  TileStream(std::shared_ptr<const SlideLibrary> library, StreamConfig config);

  /// config().batch_size tiles with consecutive indices.
  TileBatch next_batch();
  TileBatch next_batch(int count);

  /// Errors: MaxAttemptsExceeded (with slide and tile index), ExhaustedDataset.
  std::pair<TileImage, TileMeta> make_tile(std::uint64_t tile_index) const;

  std::uint64_t next_index() const { return next_index_; }
  const StreamConfig& config() const { return config_; }

 private:
  std::shared_ptr<const SlideLibrary> library_;
  StreamConfig config_;
  std::vector<std::string> dataset_order_;
  std::vector<double> dataset_cdf_;
  std::uint64_t next_index_ = 0;
};

}  // namespace tilestream
