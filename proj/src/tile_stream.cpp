#include "tilestream/tile_stream.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>

#include "tilestream/errors.hpp"
#include "tilestream/rng.hpp"

namespace tilestream {

void StreamConfig::validate() const {
  sampler.validate();
  double total = 0.0;
  for (const auto& d : datasets) {
    if (!(d.weight > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "dataset weight for " + d.dataset + " must be > 0");
    }
    total += d.weight;
  }
  if (!datasets.empty() && !(total > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "dataset weights must sum to > 0");
  }
  if (hsv) hsv->validate();
  if (hed_sigma && !(*hed_sigma >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "hed_sigma must be >= 0");
  }
  if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 1");
  if (!(verify_fraction >= 0.0 && verify_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "verify_fraction must lie in [0, 1]");
  }
  if (workers < 1) throw Error(ErrorCode::InvalidArgument, "workers must be >= 1");
}

nlohmann::json StreamConfig::to_json() const {
  nlohmann::json j;
  nlohmann::json ds = nlohmann::json::array();
  for (const auto& d : datasets) ds.push_back({{"dataset", d.dataset}, {"weight", d.weight}});
  j["datasets"] = ds;
  j["tile_size"] = sampler.tile_size_px;
  j["mpp"] = sampler.mpp_choices;
  j["foreground_threshold"] = sampler.foreground_threshold;
  j["max_attempts"] = sampler.max_attempts;
  if (hsv) {
    j["hsv"] = {{"h", {hsv->h.lo, hsv->h.hi}},
                {"s", {hsv->s.lo, hsv->s.hi}},
                {"v", {hsv->v.lo, hsv->v.hi}},
                {"min_fraction", hsv->min_fraction}};
  } else {
    j["hsv"] = nullptr;
  }
  j["hsv_disabled_mpps"] = hsv_disabled_mpps;
  j["hed_sigma"] = hed_sigma ? nlohmann::json(*hed_sigma) : nlohmann::json(nullptr);
  j["batch_size"] = batch_size;
  j["seed"] = seed;
  j["slide_weighting"] = slide_weighting == SlideWeighting::UniformByArea ? "area" : "slide";
  j["mask_mpp"] = mask_mpp;
  return j;
}

nlohmann::json TileMeta::to_json() const {
  nlohmann::json j;
  j["dataset"] = dataset;
  j["slide_id"] = slide_id;
  j["x"] = x;
  j["y"] = y;
  j["mpp"] = mpp;
  j["width"] = width;
  j["height"] = height;
  j["tile_index"] = tile_index;
  j["hed_alpha"] = hed_alpha ? nlohmann::json(*hed_alpha) : nlohmann::json(nullptr);
  j["hed_beta"] = hed_beta ? nlohmann::json(*hed_beta) : nlohmann::json(nullptr);
  return j;
}

TileMeta TileMeta::from_json(const nlohmann::json& j) {
  TileMeta m;
  m.dataset = j.at("dataset").get<std::string>();
  m.slide_id = j.at("slide_id").get<std::string>();
  m.x = j.at("x").get<std::int64_t>();
  m.y = j.at("y").get<std::int64_t>();
  m.mpp = j.at("mpp").get<double>();
  m.width = j.at("width").get<int>();
  m.height = j.at("height").get<int>();
  m.tile_index = j.at("tile_index").get<std::uint64_t>();
  if (!j.at("hed_alpha").is_null()) m.hed_alpha = j.at("hed_alpha").get<std::array<double, 3>>();
  if (!j.at("hed_beta").is_null()) m.hed_beta = j.at("hed_beta").get<std::array<double, 3>>();
  return m;
}

std::shared_ptr<const SlideLibrary> SlideLibrary::build(const DatasetManifest& manifest,
                                                        double mask_mpp) {
  auto lib = std::make_shared<SlideLibrary>();
  for (const auto& e : manifest.entries) {
    SlideHandle h = open_slide(e.path, e.dataset, e.mpp);
    auto mask = patch::compute_foreground_mask(h, mask_mpp);
    const double area = h.width() * h.level0_mpp() * h.height() * h.level0_mpp();
    lib->by_dataset_[e.dataset].push_back({std::move(h), std::move(mask), area});
  }
  return lib;
}

const std::vector<SlideLibrary::Slide>& SlideLibrary::slides(const std::string& dataset) const {
  auto it = by_dataset_.find(dataset);
  if (it == by_dataset_.end() || it->second.empty()) {
    throw Error(ErrorCode::ExhaustedDataset, "dataset '" + dataset + "' has no slides");
  }
  return it->second;
}

std::vector<std::string> SlideLibrary::datasets() const {
  std::vector<std::string> out;
  for (const auto& [name, slides] : by_dataset_) out.push_back(name);
  return out;
}

TileStream::TileStream(std::shared_ptr<const SlideLibrary> library, StreamConfig config)
    : library_(std::move(library)), config_(std::move(config)) {
  config_.validate();
  std::vector<double> weights;
  if (config_.datasets.empty()) {
    dataset_order_ = library_->datasets();
    weights.assign(dataset_order_.size(), 1.0);
  } else {
    for (const auto& d : config_.datasets) {
      dataset_order_.push_back(d.dataset);
      weights.push_back(d.weight);
    }
  }
  if (dataset_order_.empty()) throw Error(ErrorCode::ExhaustedDataset, "no datasets to sample");
  for (const auto& name : dataset_order_) library_->slides(name);  // fail early

  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double acc = 0.0;
  for (double w : weights) {
    acc += w / total;
    dataset_cdf_.push_back(acc);
  }
  dataset_cdf_.back() = 1.0;
}

namespace {

std::size_t draw_from_cdf(const std::vector<double>& cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

bool hsv_applies(const StreamConfig& cfg, double mpp) {
  if (!cfg.hsv) return false;
  return std::none_of(cfg.hsv_disabled_mpps.begin(), cfg.hsv_disabled_mpps.end(),
                      [mpp](double m) { return std::abs(m - mpp) <= 1e-9 * std::max(1.0, m); });
}

}  // namespace

std::pair<TileImage, TileMeta> TileStream::make_tile(std::uint64_t tile_index) const {
  Rng rng(derive_seed(config_.seed, tile_index));
  const int budget = config_.sampler.max_attempts;
  int used = 0;
  std::string last_slide;
  while (used < budget) {
    const std::string& dataset = dataset_order_[draw_from_cdf(dataset_cdf_, rng.uniform01())];
    const auto& slides = library_->slides(dataset);
    std::size_t pick;
    if (config_.slide_weighting == SlideWeighting::UniformByArea) {
      double total = 0.0;
      for (const auto& s : slides) total += s.area_um2;
      double u = rng.uniform01() * total;
      pick = slides.size() - 1;
      for (std::size_t i = 0; i < slides.size(); ++i) {
        if (u < slides[i].area_um2) {
          pick = i;
          break;
        }
        u -= slides[i].area_um2;
      }
    } else {
      pick = rng.uniform_index(slides.size());
    }
    const auto& slide = slides[pick];
    last_slide = slide.handle.slide_id();

    patch::SamplerParams params = config_.sampler;
    params.max_attempts = budget - used;
    patch::TileCandidate cand;
    try {
      cand = patch::sample_tile(slide.handle, slide.mask, params, rng);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MaxAttemptsExceeded) throw;
      throw Error(ErrorCode::MaxAttemptsExceeded,
                  "tile " + std::to_string(tile_index) + ", dataset " + dataset + ", slide " +
                      last_slide + ": " + e.what());
    }
    used += cand.attempt_count;

    const bool check_hsv = hsv_applies(config_, cand.tile.mpp);
    if (check_hsv && !stain::hsv_tile_filter(cand.tile, *config_.hsv).accept) continue;

    // Re-check a deterministic subset of emitted tiles against both rules.
    if (config_.verify_fraction > 0.0 &&
        static_cast<double>(mix64(tile_index ^ 0x7e57ULL) >> 11) * 0x1.0p-53 <
            config_.verify_fraction) {
      const double fg = patch::foreground_fraction(slide.mask, cand.tile.origin_l0,
                                                   config_.sampler.tile_size_px, cand.tile.mpp);
      const bool hsv_ok = !check_hsv || stain::hsv_tile_filter(cand.tile, *config_.hsv).accept;
      if (fg < config_.sampler.foreground_threshold || !hsv_ok) {
        throw Error(ErrorCode::ValidationError,
                    "tile " + std::to_string(tile_index) + " failed server-side re-check");
      }
    }

    TileMeta meta;
    meta.dataset = dataset;
    meta.slide_id = cand.tile.slide_id;
    meta.x = cand.tile.origin_l0.x;
    meta.y = cand.tile.origin_l0.y;
    meta.mpp = cand.tile.mpp;
    meta.width = cand.tile.width;
    meta.height = cand.tile.height;
    meta.tile_index = tile_index;
    TileImage tile = std::move(cand.tile);
    if (config_.hed_sigma) {
      const auto hed = stain::HedParams::sample(*config_.hed_sigma, rng);
      tile = stain::hed_augment(tile, hed);
      meta.hed_alpha = hed.alpha;
      meta.hed_beta = hed.beta;
    }
    return {std::move(tile), std::move(meta)};
  }
  throw Error(ErrorCode::MaxAttemptsExceeded,
              "tile " + std::to_string(tile_index) + ": " + std::to_string(budget) +
                  " attempts rejected (last slide " + last_slide + ")");
}

TileBatch TileStream::next_batch() { return next_batch(config_.batch_size); }

TileBatch TileStream::next_batch(int count) {
  if (count < 0) throw Error(ErrorCode::InvalidArgument, "negative batch size");
  const std::uint64_t first = next_index_;
  std::vector<std::pair<TileImage, TileMeta>> made(static_cast<std::size_t>(count));
  const int workers = std::min(config_.workers, count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) made[i] = make_tile(first + i);
  } else {
    // Tiles are independent given their index, so the split does not affect output.
    std::vector<std::future<void>> jobs;
    for (int w = 0; w < workers; ++w) {
      jobs.push_back(std::async(std::launch::async, [&, w] {
        for (int i = w; i < count; i += workers) made[i] = make_tile(first + i);
      }));
    }
    for (auto& j : jobs) j.get();
  }
  next_index_ += static_cast<std::uint64_t>(count);

  TileBatch batch;
  batch.tiles.reserve(made.size());
  batch.meta.reserve(made.size());
  for (auto& [tile, meta] : made) {
    batch.tiles.push_back(std::move(tile));
    batch.meta.push_back(std::move(meta));
  }
  return batch;
}

}  // namespace tilestream
