#include "support/fixtures.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>

#include <unistd.h>

namespace fixtures {

using namespace tilestream;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::path(TILESTREAM_TEST_TMP) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path cached_slide(const SyntheticSlideSpec& spec) {
  std::ostringstream key;
  key << "slide_s" << spec.seed << "_" << spec.width_px << "x" << spec.height_px << "_m"
      << spec.level0_mpp << "_c" << spec.tissue_coverage << "_t" << static_cast<int>(spec.style)
      << "_l" << spec.pyramid_levels;
  const fs::path dir = fs::path(TILESTREAM_TEST_TMP) / "slides";
  fs::create_directories(dir);
  const fs::path sidecar = dir / (key.str() + ".json");
  if (!fs::exists(sidecar)) {
    // Write under a temporary name first so a concurrent test binary never
    // sees a half-written package.
    const fs::path tmp = dir / (key.str() + "_tmp" + std::to_string(::getpid()));
    fs::create_directories(tmp);
    generate_synthetic_slide(spec, tmp / (key.str() + ".json"));
    for (const auto& entry : fs::directory_iterator(tmp)) {
      fs::rename(entry.path(), dir / entry.path().filename());
    }
    fs::remove_all(tmp);
  }
  return sidecar;
}

fs::path slide_from_image(const fs::path& dir, const std::string& stem, const RgbImage& image,
                          double mpp, int pyramid_levels) {
  SlidePackage pkg;
  pkg.level0 = image;
  pkg.level0_mpp = mpp;
  pkg.pyramid_levels = pyramid_levels;
  const fs::path sidecar = dir / (stem + ".json");
  write_slide_package(sidecar, pkg);
  return sidecar;
}

fs::path copy_slide_package(const fs::path& sidecar, const fs::path& dir) {
  const std::string stem = sidecar.stem().string();
  fs::create_directories(dir);
  for (const auto& entry : fs::directory_iterator(sidecar.parent_path())) {
    const std::string name = entry.path().filename().string();
    const bool ours = name.rfind(stem, 0) == 0 &&
                      (name.size() > stem.size() && (name[stem.size()] == '.' || name[stem.size()] == '_'));
    if (ours && name.find("_tmp") == std::string::npos) {
      fs::copy_file(entry.path(), dir / name, fs::copy_options::overwrite_existing);
    }
  }
  return dir / sidecar.filename();
}

fs::path write_manifest(const fs::path& path,
                        const std::vector<std::pair<fs::path, std::string>>& entries) {
  std::ofstream out(path);
  for (const auto& [slide, dataset] : entries) {
    out << R"({"path": ")" << slide.generic_string() << R"(", "dataset": ")" << dataset << "\"}\n";
  }
  return path;
}

RgbImage random_image(int w, int h, Rng& rng) {
  RgbImage img(w, h);
  for (auto& b : img.pixels) b = static_cast<std::uint8_t>(rng.uniform_index(256));
  return img;
}

RgbImage random_he_image(int w, int h, Rng& rng) {
  RgbImage img(w, h);
  static constexpr int kPalette[4][3] = {{150, 80, 180}, {200, 120, 190}, {90, 50, 140}, {235, 225, 235}};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto& base = kPalette[rng.uniform_index(4)];
      for (int c = 0; c < 3; ++c) {
        const int v = base[c] + static_cast<int>(rng.uniform_index(41)) - 20;
        img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
      }
    }
  }
  return img;
}

RgbImage solid_image(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  RgbImage img(w, h);
  img.fill(r, g, b);
  return img;
}

std::vector<std::uint8_t> file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace fixtures
