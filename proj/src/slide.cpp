#include "tilestream/slide.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <mutex>

#include <json.hpp>

#include "tilestream/errors.hpp"
#include "tilestream/png_io.hpp"

namespace tilestream {

namespace fs = std::filesystem;
using nlohmann::json;

struct SlideHandle::Impl {
  struct Level {
    PyramidLevel geometry;
    fs::path file;
    mutable std::once_flag once;
    mutable RgbImage pixels;
  };

  fs::path path;
  std::string dataset_id;
  std::string slide_id;
  double level0_mpp = 0.0;
  std::vector<PyramidLevel> geometry;
  std::vector<std::unique_ptr<Level>> levels;
};

const fs::path& SlideHandle::path() const { return impl_->path; }
const std::string& SlideHandle::dataset_id() const { return impl_->dataset_id; }
const std::string& SlideHandle::slide_id() const { return impl_->slide_id; }
double SlideHandle::level0_mpp() const { return impl_->level0_mpp; }
const std::vector<PyramidLevel>& SlideHandle::levels() const { return impl_->geometry; }

const RgbImage& SlideHandle::level_pixels(std::size_t level) const {
  const auto& lv = *impl_->levels.at(level);
  std::call_once(lv.once, [&lv] {
    RgbImage img = png::read(lv.file);
    if (img.width != lv.geometry.width || img.height != lv.geometry.height) {
      throw Error(ErrorCode::DecodeError, lv.file.string() + ": dimensions changed since open");
    }
    lv.pixels = std::move(img);
  });
  return lv.pixels;
}

std::size_t SlideHandle::level_for_mpp(double mpp) const {
  std::size_t best = 0;
  for (std::size_t i = 0; i < impl_->geometry.size(); ++i) {
    if (impl_->level0_mpp * impl_->geometry[i].downsample <= mpp * (1.0 + 1e-9)) best = i;
  }
  return best;
}

namespace {

struct LevelSource {
  fs::path file;
  double downsample;
};

void validate_geometry(const fs::path& path, const std::vector<PyramidLevel>& levels) {
  if (levels.empty()) throw Error(ErrorCode::UnsupportedFormat, path.string() + ": no levels");
  if (levels.front().downsample != 1.0) {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + ": level 0 downsample must be 1");
  }
  const auto& base = levels.front();
  for (std::size_t i = 1; i < levels.size(); ++i) {
    const auto& lv = levels[i];
    if (!(lv.downsample > levels[i - 1].downsample)) {
      throw Error(ErrorCode::UnsupportedFormat,
                  path.string() + ": downsample factors must strictly increase");
    }
    const double ew = base.width / lv.downsample;
    const double eh = base.height / lv.downsample;
    if (std::abs(lv.width - ew) > 1.0 || std::abs(lv.height - eh) > 1.0) {
      throw Error(ErrorCode::UnsupportedFormat,
                  path.string() + ": level " + std::to_string(i) + " dimensions inconsistent");
    }
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

SlideHandle open_slide(const fs::path& path, const std::string& dataset_id,
                       std::optional<double> mpp_override) {
  if (!fs::exists(path)) throw Error(ErrorCode::FileNotFound, path.string());
  if (mpp_override && !(*mpp_override > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "mpp override must be positive");
  }

  fs::path sidecar;
  if (path.extension() == ".json") {
    sidecar = path;
  } else if (png::has_signature(path)) {
    auto candidate = fs::path(path).replace_extension(".json");
    if (fs::exists(candidate)) sidecar = candidate;
  } else {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + ": not a slide sidecar or PNG");
  }

  std::vector<LevelSource> sources;
  std::optional<double> mpp;
  if (!sidecar.empty()) {
    json meta;
    try {
      meta = json::parse(read_text(sidecar));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::UnsupportedFormat, sidecar.string() + ": " + e.what());
    }
    const fs::path dir = sidecar.parent_path();
    try {
      if (meta.contains("levels")) {
        for (const auto& lv : meta.at("levels")) {
          sources.push_back({dir / lv.at("path").get<std::string>(),
                             lv.at("downsample").get<double>()});
        }
      } else if (meta.contains("image_path")) {
        sources.push_back({dir / meta.at("image_path").get<std::string>(), 1.0});
      }
      if (meta.contains("level0_mpp") && !meta.at("level0_mpp").is_null()) {
        mpp = meta.at("level0_mpp").get<double>();
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::UnsupportedFormat, sidecar.string() + ": " + e.what());
    }
    if (sources.empty()) {
      throw Error(ErrorCode::UnsupportedFormat, sidecar.string() + ": no pyramid metadata");
    }
  } else {
    sources.push_back({path, 1.0});
  }

  if (mpp_override) mpp = mpp_override;
  if (!mpp) {
    throw Error(ErrorCode::MissingMpp, path.string() + ": no pixel spacing and no override");
  }
  if (!(*mpp > 0.0)) throw Error(ErrorCode::UnsupportedFormat, path.string() + ": level0_mpp <= 0");

  auto impl = std::make_shared<SlideHandle::Impl>();
  impl->path = path;
  impl->dataset_id = dataset_id;
  impl->slide_id = path.stem().string();
  impl->level0_mpp = *mpp;
  for (const auto& src : sources) {
    if (!fs::exists(src.file)) throw Error(ErrorCode::FileNotFound, src.file.string());
    if (!png::has_signature(src.file)) {
      throw Error(ErrorCode::UnsupportedFormat, src.file.string() + ": level is not a PNG");
    }
    const auto hdr = png::read_header(src.file);
    auto level = std::make_unique<SlideHandle::Impl::Level>();
    level->geometry = {hdr.width, hdr.height, src.downsample};
    level->file = src.file;
    impl->geometry.push_back(level->geometry);
    impl->levels.push_back(std::move(level));
  }
  validate_geometry(path, impl->geometry);

  SlideHandle handle;
  handle.impl_ = std::move(impl);
  return handle;
}

double footprint_l0(const SlideHandle& slide, int size_px, double mpp) {
  return size_px * mpp / slide.level0_mpp();
}

TileImage read_region(const SlideHandle& slide, Point origin_l0, double mpp, int width_px,
                      int height_px) {
  if (width_px <= 0 || height_px <= 0) {
    throw Error(ErrorCode::InvalidArgument, "region size must be positive");
  }
  if (!(mpp >= slide.level0_mpp() * (1.0 - 1e-12))) {
    throw Error(ErrorCode::InvalidArgument, "requested mpp is finer than level 0");
  }
  const double fw = footprint_l0(slide, width_px, mpp);
  const double fh = footprint_l0(slide, height_px, mpp);
  const double tol = 1e-6;
  if (origin_l0.x < 0 || origin_l0.y < 0 || origin_l0.x + fw > slide.width() + tol ||
      origin_l0.y + fh > slide.height() + tol) {
    throw Error(ErrorCode::OutOfBounds,
                "region (" + std::to_string(origin_l0.x) + "," + std::to_string(origin_l0.y) +
                    ") + " + std::to_string(fw) + "x" + std::to_string(fh) + " outside " +
                    std::to_string(slide.width()) + "x" + std::to_string(slide.height()));
  }

  // Levels whose rounded dimensions clip the window fall back to finer ones.
  for (std::size_t level = slide.level_for_mpp(mpp) + 1; level-- > 0;) {
    const PyramidLevel& g = slide.levels()[level];
    const double ds = g.downsample;
    const double x0 = origin_l0.x / ds;
    const double y0 = origin_l0.y / ds;
    const double scale = mpp / (slide.level0_mpp() * ds);
    if (level > 0 && (x0 + width_px * scale > g.width + tol ||
                      y0 + height_px * scale > g.height + tol)) {
      continue;
    }
    RgbImage pixels = area_resample(slide.level_pixels(level), x0, y0, scale, width_px, height_px);
    return TileImage(std::move(pixels), mpp, origin_l0, slide.slide_id());
  }
  throw Error(ErrorCode::OutOfBounds, "no level covers the requested region");
}

}  // namespace tilestream
