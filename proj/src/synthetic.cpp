#include "tilestream/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "tilestream/errors.hpp"
#include "tilestream/png_io.hpp"
#include "tilestream/rng.hpp"

namespace tilestream {

namespace fs = std::filesystem;

namespace {

int auto_levels(int w, int h) {
  int levels = 1;
  while (std::min(w, h) / (1 << levels) >= 512) ++levels;
  return levels;
}

struct Rgb {
  int r, g, b;
};

std::uint8_t clamp8(int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); }

// Per-pixel hash so texture does not depend on rasterization order.
std::uint64_t pixel_hash(std::uint64_t seed, int x, int y) {
  return mix64(seed ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32 |
                       static_cast<std::uint32_t>(y)));
}

struct Ellipse {
  double cx, cy, a, b, cos_t, sin_t;
  Rgb color;
};

}  // namespace

void write_slide_package(const fs::path& sidecar, const SlidePackage& package) {
  const RgbImage& base = package.level0;
  if (base.empty()) throw Error(ErrorCode::InvalidArgument, "empty level-0 image");
  const fs::path dir = sidecar.parent_path();
  if (!dir.empty()) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string());
  }
  const std::string stem = sidecar.stem().string();

  nlohmann::json meta;
  meta["format"] = "tilestream-slide";
  meta["width_px"] = base.width;
  meta["height_px"] = base.height;
  meta["level0_mpp"] = package.level0_mpp ? nlohmann::json(*package.level0_mpp) : nullptr;
  meta["seed"] = package.seed ? nlohmann::json(*package.seed) : nullptr;
  meta["image_path"] = stem + ".png";

  png::write(dir / (stem + ".png"), base);
  nlohmann::json levels = nlohmann::json::array();
  levels.push_back({{"path", stem + ".png"}, {"downsample", 1.0}});
  for (int k = 1; k < std::max(1, package.pyramid_levels); ++k) {
    const int ds = 1 << k;
    const int w = base.width / ds;
    const int h = base.height / ds;
    if (w < 1 || h < 1) break;
    const std::string name = stem + "_l" + std::to_string(k) + ".png";
    png::write(dir / name, area_resample(base, 0, 0, ds, w, h));
    levels.push_back({{"path", name}, {"downsample", static_cast<double>(ds)}});
  }
  meta["levels"] = levels;

  if (package.tissue_mask) {
    if (package.tissue_mask->width != base.width || package.tissue_mask->height != base.height) {
      throw Error(ErrorCode::InvalidArgument, "tissue mask must match level-0 dimensions");
    }
    meta["tissue_mask_path"] = stem + ".mask";
    write_packed_mask(dir / (stem + ".mask"), *package.tissue_mask);
  } else {
    meta["tissue_mask_path"] = nullptr;
  }

  std::ofstream out(sidecar, std::ios::binary | std::ios::trunc);
  if (!(out << meta.dump(2) << '\n')) throw Error(ErrorCode::IoError, "cannot write " + sidecar.string());
}

fs::path generate_synthetic_slide(const SyntheticSlideSpec& spec, const fs::path& out) {
  if (!(spec.tissue_coverage > 0.0 && spec.tissue_coverage < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "tissue_coverage must lie in (0, 1)");
  }
  if (spec.width_px < 512 || spec.height_px < 512) {
    throw Error(ErrorCode::InvalidArgument, "synthetic slide dimensions must be >= 512");
  }
  if (!(spec.level0_mpp > 0.0)) throw Error(ErrorCode::InvalidArgument, "level0_mpp must be > 0");

  const int W = spec.width_px;
  const int H = spec.height_px;
  Rng rng(spec.seed);

  // Ellipses are added until the requested coverage is reached; radii shrink
  // as the remaining deficit shrinks so the final overshoot stays small.
  std::vector<std::uint16_t> owner(static_cast<std::size_t>(W) * H, 0);
  std::vector<Ellipse> ellipses;
  const double total = static_cast<double>(W) * H;
  const double target = spec.tissue_coverage * total;
  const double short_side = std::min(W, H);
  double covered = 0.0;
  while (covered < target && ellipses.size() < 60000) {
    const double deficit = target - covered;
    const double r_max = std::min(0.14 * short_side, 1.2 * std::sqrt(deficit / std::numbers::pi));
    const double r_min = std::min(r_max, std::max(4.0, 0.04 * short_side));
    Ellipse e{};
    e.cx = rng.uniform(0.0, W);
    e.cy = rng.uniform(0.0, H);
    e.a = rng.uniform(r_min, r_max);
    e.b = e.a * rng.uniform(0.55, 1.0);
    const double theta = rng.uniform(0.0, std::numbers::pi);
    e.cos_t = std::cos(theta);
    e.sin_t = std::sin(theta);
    if (spec.style == TissueStyle::GrayMarker) {
      const int g = 100 + static_cast<int>(rng.uniform_index(30));
      e.color = {g, g, g};
    } else {
      // Blend between a hematoxylin-rich purple and an eosin-rich pink.
      const double t = rng.uniform01();
      e.color = {static_cast<int>(std::lround(150 + t * 75)),
                 static_cast<int>(std::lround(80 + t * 55)),
                 static_cast<int>(std::lround(185 + t * 10))};
    }
    ellipses.push_back(e);
    const auto id = static_cast<std::uint16_t>(ellipses.size());

    const double reach = std::max(e.a, e.b);
    const int x_lo = std::max(0, static_cast<int>(std::floor(e.cx - reach)));
    const int x_hi = std::min(W - 1, static_cast<int>(std::ceil(e.cx + reach)));
    const int y_lo = std::max(0, static_cast<int>(std::floor(e.cy - reach)));
    const int y_hi = std::min(H - 1, static_cast<int>(std::ceil(e.cy + reach)));
    for (int y = y_lo; y <= y_hi; ++y) {
      const double dy = y + 0.5 - e.cy;
      for (int x = x_lo; x <= x_hi; ++x) {
        const double dx = x + 0.5 - e.cx;
        const double u = (dx * e.cos_t + dy * e.sin_t) / e.a;
        const double v = (-dx * e.sin_t + dy * e.cos_t) / e.b;
        if (u * u + v * v <= 1.0) {
          auto& o = owner[static_cast<std::size_t>(y) * W + x];
          if (o == 0) covered += 1.0;
          o = id;
        }
      }
    }
  }

  BitMask mask(W, H);
  RgbImage image(W, H);
  const std::uint64_t tex_seed = mix64(spec.seed ^ 0x5eedf00dULL);
  constexpr int kCell = 12;
  for (int y = 0; y < H; ++y) {
    std::uint8_t* row = image.row(y);
    for (int x = 0; x < W; ++x) {
      const std::uint64_t h = pixel_hash(tex_seed, x, y);
      const std::uint16_t id = owner[static_cast<std::size_t>(y) * W + x];
      std::uint8_t* p = row + static_cast<std::size_t>(x) * 3;
      if (id == 0) {
        const int base = 247 + static_cast<int>(h % 8);
        p[0] = clamp8(base + static_cast<int>((h >> 8) % 3));
        p[1] = clamp8(base + static_cast<int>((h >> 16) % 3));
        p[2] = clamp8(base + static_cast<int>((h >> 24) % 3));
        continue;
      }
      mask.cells[static_cast<std::size_t>(y) * W + x] = 1;
      Rgb c = ellipses[id - 1].color;
      if (spec.style == TissueStyle::HematoxylinEosin) {
        // One candidate nucleus per kCell x kCell cell.
        const int gx = x / kCell;
        const int gy = y / kCell;
        const std::uint64_t ch = pixel_hash(tex_seed ^ 0xa11ce, gx, gy);
        if (ch % 2 == 0) {
          const double ncx = gx * kCell + 3 + static_cast<double>((ch >> 8) % (kCell - 6));
          const double ncy = gy * kCell + 3 + static_cast<double>((ch >> 16) % (kCell - 6));
          const double r = 2.0 + static_cast<double>((ch >> 24) % 3);
          const double dx = x + 0.5 - ncx;
          const double dy = y + 0.5 - ncy;
          if (dx * dx + dy * dy <= r * r) c = {85, 45, 130};
        }
        const int n = static_cast<int>(h % 25) - 12;
        p[0] = clamp8(c.r + n + static_cast<int>((h >> 8) % 7) - 3);
        p[1] = clamp8(c.g + n + static_cast<int>((h >> 16) % 7) - 3);
        p[2] = clamp8(c.b + n + static_cast<int>((h >> 24) % 7) - 3);
      } else {
        const int n = static_cast<int>(h % 9) - 4;
        p[0] = p[1] = p[2] = clamp8(c.r + n);
      }
    }
  }

  SlidePackage package;
  package.level0 = std::move(image);
  package.level0_mpp = spec.level0_mpp;
  package.tissue_mask = std::move(mask);
  package.seed = spec.seed;
  package.pyramid_levels = spec.pyramid_levels > 0 ? spec.pyramid_levels : auto_levels(W, H);
  write_slide_package(out, package);
  return out;
}

BitMask read_tissue_mask(const fs::path& sidecar) {
  std::ifstream in(sidecar, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, sidecar.string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::UnsupportedFormat, sidecar.string() + ": " + e.what());
  }
  if (!meta.contains("tissue_mask_path") || meta["tissue_mask_path"].is_null()) {
    throw Error(ErrorCode::UnsupportedFormat, sidecar.string() + ": no tissue mask recorded");
  }
  return read_packed_mask(sidecar.parent_path() / meta["tissue_mask_path"].get<std::string>(),
                          meta.at("width_px").get<int>(), meta.at("height_px").get<int>());
}

}  // namespace tilestream
